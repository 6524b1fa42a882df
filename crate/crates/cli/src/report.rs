use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::config::{Parameters, Scenario};
use crate::CliError;

/// How a row's value is judged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Check {
    /// `|value − closed form| ≤ tol`.
    Abs(f64),
    /// `|value − closed form| ≤ k·std_err`.
    Sigma(f64),
    /// `value > bound`.
    Above(f64),
    /// `value ≤ bound`.
    AtMost(f64),
}

impl Check {
    fn describe(self) -> String {
        match self {
            Check::Abs(t) => format!("|value - closed_form| <= {t:e}"),
            Check::Sigma(k) => format!("|value - closed_form| <= {k}*std_err"),
            Check::Above(b) => format!("value > {b:e}"),
            Check::AtMost(b) => format!("value <= {b:e}"),
        }
    }
}

/// One reported number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub quantity: String,
    pub label: String,
    pub re: f64,
    pub im: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form_im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

impl Row {
    pub fn value(quantity: &str, label: impl Into<String>, value: Complex64) -> Row {
        Row {
            quantity: quantity.into(),
            label: label.into(),
            re: value.re,
            im: value.im,
            std_err: None,
            closed_form_re: None,
            closed_form_im: None,
            tolerance: None,
            pass: None,
        }
    }

    pub fn real(quantity: &str, label: impl Into<String>, value: f64) -> Row {
        Row::value(quantity, label, Complex64::new(value, 0.0))
    }

    pub fn with_std_err(mut self, se: f64) -> Row {
        self.std_err = Some(se);
        self
    }

    pub fn with_closed_form(mut self, z: Complex64) -> Row {
        self.closed_form_re = Some(z.re);
        self.closed_form_im = Some(z.im);
        self
    }

    /// Applies `check`. Closed-form checks need [`Row::with_closed_form`] first.
    pub fn checked(mut self, check: Check) -> Row {
        let value = Complex64::new(self.re, self.im);
        let target = Complex64::new(
            self.closed_form_re.unwrap_or(0.0),
            self.closed_form_im.unwrap_or(0.0),
        );
        let pass = match check {
            Check::Abs(t) => (value - target).norm() <= t,
            Check::Sigma(k) => match self.std_err {
                Some(se) if se > 0.0 => (value - target).norm() <= k * se,
                _ => (value - target).norm() == 0.0,
            },
            Check::Above(b) => self.re > b,
            Check::AtMost(b) => self.re <= b,
        };
        self.tolerance = Some(check.describe());
        self.pass = Some(pass);
        self
    }

    fn numbers(&self) -> impl Iterator<Item = f64> + '_ {
        [self.re, self.im]
            .into_iter()
            .chain(self.std_err)
            .chain(self.closed_form_re)
            .chain(self.closed_form_im)
    }
}

/// Outcome of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub parameters: Parameters,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub checks: usize,
    pub failures: usize,
    pub passed: bool,
    pub results: Vec<Row>,
    pub duration_seconds: f64,
}

impl RunReport {
    pub fn new(
        scenario: Scenario,
        parameters: Parameters,
        results: Vec<Row>,
    ) -> Result<Self, CliError> {
        if let Some(r) = results.iter().find(|r| r.numbers().any(|x| !x.is_finite())) {
            return Err(CliError::Library {
                scenario,
                message: format!("non-finite result for {} {}", r.quantity, r.label),
            });
        }
        let checks = results.iter().filter(|r| r.pass.is_some()).count();
        let failures = results.iter().filter(|r| r.pass == Some(false)).count();
        Ok(RunReport {
            scenario,
            seed: parameters.seed,
            parameters,
            checks,
            failures,
            passed: failures == 0,
            results,
            duration_seconds: 0.0,
        })
    }

    /// `0` when every check passed, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| CliError::Io(e.to_string());
        out.write_record(CSV_COLUMNS).map_err(io)?;
        let opt = |x: Option<f64>| x.map(number).unwrap_or_default();
        for r in &self.results {
            out.write_record([
                self.scenario.name().to_string(),
                r.quantity.clone(),
                r.label.clone(),
                number(r.re),
                number(r.im),
                opt(r.std_err),
                opt(r.closed_form_re),
                opt(r.closed_form_im),
                r.pass.map(|p| p.to_string()).unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        out.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}

// Shortest round-trip form, with an exponent for very small or large values.
fn number(x: f64) -> String {
    serde_json::to_string(&x).expect("finite")
}

pub const CSV_COLUMNS: [&str; 9] = [
    "scenario",
    "quantity",
    "label",
    "re",
    "im",
    "std_err",
    "closed_form_re",
    "closed_form_im",
    "pass",
];

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn checks() {
        let r = Row::value("x", "", c(1.0, 1e-11)).with_closed_form(c(1.0, 0.0));
        assert_eq!(r.clone().checked(Check::Abs(1e-10)).pass, Some(true));
        assert_eq!(r.checked(Check::Abs(1e-12)).pass, Some(false));
        let mc = Row::real("p", "", 0.26)
            .with_std_err(0.01)
            .with_closed_form(c(0.25, 0.0));
        assert_eq!(mc.clone().checked(Check::Sigma(5.0)).pass, Some(true));
        assert_eq!(mc.checked(Check::Sigma(0.5)).pass, Some(false));
        assert_eq!(
            Row::real("p", "", 0.1).checked(Check::Above(1e-3)).pass,
            Some(true)
        );
        assert_eq!(
            Row::real("r", "", 0.1).checked(Check::AtMost(1e-3)).pass,
            Some(false)
        );
    }

    #[test]
    fn report_counts_and_csv_layout() {
        let rows = vec![
            Row::real("a", "++", 1.0)
                .with_closed_form(c(1.0, 0.0))
                .checked(Check::Abs(0.0)),
            Row::real("b", "", 2.0),
            Row::real("c", "", 0.0).checked(Check::Above(1.0)),
        ];
        let rep = RunReport::new(Scenario::Collapse, Parameters::default(), rows).unwrap();
        assert_eq!((rep.checks, rep.failures, rep.exit_code()), (2, 1, 1));
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(lines[1], "collapse,a,++,1.0,0.0,,1.0,0.0,true");
        assert_eq!(lines[2], "collapse,b,,2.0,0.0,,,,");
    }

    #[test]
    fn non_finite_values_are_refused() {
        let rows = vec![Row::real("a", "", f64::NAN)];
        assert!(RunReport::new(Scenario::Collapse, Parameters::default(), rows).is_err());
    }
}
