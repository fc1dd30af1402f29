//! Per-(method, r) result table and its CSV/JSON renderings.

use serde::Serialize;

/// Rounds to five significant digits, the precision every report prints.
pub fn sig5(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.4e}").parse().unwrap_or(v)
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.4e}"),
        Some(x) if x > 0.0 => "inf".into(),
        Some(_) => "nan".into(),
        None => String::new(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub method: String,
    pub r: usize,
    pub dr_star: Option<f64>,
    pub abs_error: Option<f64>,
    pub rel_error: Option<f64>,
    /// `sigma_{r+1} / ||H||`, only with certified norms.
    pub lower_bound: Option<f64>,
    pub surrogate_k: Option<usize>,
    pub norm_method: Option<String>,
    pub status: String,
    #[serde(skip)]
    pub seconds: f64,
}

impl ReportRow {
    pub fn failed(method: &str, r: usize, status: String, seconds: f64) -> Self {
        Self {
            method: method.into(),
            r,
            dr_star: None,
            abs_error: None,
            rel_error: None,
            lower_bound: None,
            surrogate_k: None,
            norm_method: None,
            status,
            seconds,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    /// Applies [`sig5`] to every numeric field.
    pub fn rounded(mut self) -> Self {
        for v in [&mut self.dr_star, &mut self.abs_error, &mut self.rel_error, &mut self.lower_bound] {
            *v = v.map(sig5);
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemSummary {
    pub source: String,
    pub n: usize,
    pub storage: String,
    pub state_space_symmetric: bool,
    pub full_norm: Option<f64>,
    pub norm_method: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub system: SystemSummary,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(ReportRow::is_ok)
    }

    pub fn row(&self, method: &str, r: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|x| x.method == method && x.r == r)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,r,dr_star,abs_error,rel_error,lower_bound,k,norm_method,status\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                row.method,
                row.r,
                cell(row.dr_star),
                cell(row.abs_error),
                cell(row.rel_error),
                cell(row.lower_bound),
                row.surrogate_k.map(|k| k.to_string()).unwrap_or_default(),
                row.norm_method.as_deref().unwrap_or(""),
                row.status.replace([',', '\n'], ";"),
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Wall-clock seconds per row, kept apart so reports stay reproducible.
    pub fn timing_csv(&self) -> String {
        let mut out = String::from("method,r,seconds\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{:.3}\n", row.method, row.r, row.seconds));
        }
        out
    }
}
