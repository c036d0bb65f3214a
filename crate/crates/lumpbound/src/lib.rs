//! Error bounds for replacing transient conduction with a lumped capacitance
//! model, plus Nusselt correlation tools with learned length scales.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod budget;
pub mod correlations;
pub mod eigen;
pub mod error;
pub mod fem;
pub mod lcm;
pub mod learning;
pub mod linalg;
pub mod mesh;
pub mod nusselt;
pub mod profiles;
pub mod rhe;
pub mod tables;

pub use error::{Error, Result};

/// Formats with 12 significant digits, fixed notation where readable.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-4..12).contains(&e) {
        let s = format!("{:.*}", (11 - e).max(0) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.11e}")
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn sig_format() {
        assert_eq!(super::fmt_sig(1.0), "1");
        assert_eq!(super::fmt_sig(0.1 + 0.2), "0.3");
        assert_eq!(super::fmt_sig(-2.5e-7), "-2.50000000000e-7");
        assert_eq!(super::fmt_sig(3.688), "3.688");
    }
}
