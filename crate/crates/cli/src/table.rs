//! Convergence tables: observed orders, CSV and aligned text.

use serde::{Deserialize, Serialize};

/// One row of a convergence sweep. Orders compare against the previous row
/// and are absent on the first row or next to a failed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "M")]
    pub m: usize,
    pub e_rho: Option<f64>,
    pub order_rho: Option<f64>,
    pub e_c: Option<f64>,
    pub order_c: Option<f64>,
    pub e_gradc: Option<f64>,
    pub order_gradc: Option<f64>,
    /// `ok`, or the error that ended the run.
    pub status: String,
}

impl ConvergenceRow {
    pub fn ok(m: usize, errors: [f64; 3]) -> Self {
        Self {
            m,
            e_rho: Some(errors[0]),
            order_rho: None,
            e_c: Some(errors[1]),
            order_c: None,
            e_gradc: Some(errors[2]),
            order_gradc: None,
            status: "ok".into(),
        }
    }

    pub fn failed(m: usize, reason: impl Into<String>) -> Self {
        Self {
            m,
            e_rho: None,
            order_rho: None,
            e_c: None,
            order_c: None,
            e_gradc: None,
            order_gradc: None,
            status: reason.into(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// `log(e_coarse / e_fine) / log(m_fine / m_coarse)`; for halved grids this is
/// `log2(e_M / e_2M)`.
pub fn observed_order(m_coarse: usize, e_coarse: f64, m_fine: usize, e_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (m_fine as f64 / m_coarse as f64).ln()
}

/// Fills the order columns from consecutive rows.
pub fn fill_orders(rows: &mut [ConvergenceRow]) {
    for k in 0..rows.len() {
        let (head, tail) = rows.split_at_mut(k);
        let row = &mut tail[0];
        let prev = head.last();
        let order = |e_prev: Option<f64>, e: Option<f64>| match (prev, e_prev, e) {
            (Some(p), Some(a), Some(b)) if a > 0.0 && b > 0.0 => {
                Some(observed_order(p.m, a, row.m, b))
            }
            _ => None,
        };
        row.order_rho = order(prev.and_then(|p| p.e_rho), row.e_rho);
        row.order_c = order(prev.and_then(|p| p.e_c), row.e_c);
        row.order_gradc = order(prev.and_then(|p| p.e_gradc), row.e_gradc);
    }
}

/// Mean of the available orders of one column.
pub fn mean_order(rows: &[ConvergenceRow], column: impl Fn(&ConvergenceRow) -> Option<f64>) -> Option<f64> {
    let orders: Vec<f64> = rows.iter().filter_map(column).collect();
    (!orders.is_empty()).then(|| orders.iter().sum::<f64>() / orders.len() as f64)
}

pub fn write_csv<W: std::io::Write>(w: W, rows: &[ConvergenceRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        out.write_record([
            "M", "e_rho", "order_rho", "e_c", "order_c", "e_gradc", "order_gradc", "status",
        ])?;
    }
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(r: R) -> csv::Result<Vec<ConvergenceRow>> {
    csv::Reader::from_reader(r).deserialize().collect()
}

/// Scientific notation with three significant digits and a two-digit
/// exponent, e.g. `3.30e-04`.
pub fn sci3(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.2e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Aligned plain-text rendering, one line per row.
pub fn emit_table(rows: &[ConvergenceRow]) -> String {
    let err = |v: Option<f64>| v.map_or_else(|| "--".to_string(), sci3);
    let ord = |v: Option<f64>| v.map_or_else(|| "--".to_string(), |o| format!("{o:.2}"));
    let mut out = format!(
        "{:>5}  {:>10}  {:>6}  {:>10}  {:>6}  {:>11}  {:>6}\n",
        "M", "|rho-U|_M", "order", "|c-Z|_M", "order", "|grad c-dZ|", "order"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>5}  {:>10}  {:>6}  {:>10}  {:>6}  {:>11}  {:>6}",
            r.m,
            err(r.e_rho),
            ord(r.order_rho),
            err(r.e_c),
            ord(r.order_c),
            err(r.e_gradc),
            ord(r.order_gradc)
        ));
        if !r.is_ok() {
            out.push_str(&format!("  ({})", r.status));
        }
        out.push('\n');
    }
    out
}
