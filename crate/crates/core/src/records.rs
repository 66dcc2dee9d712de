//! Text record formats shared by the library and the command line.

use std::io::Write;

use crate::cell_solver::CorrectorSolution;

/// Decimal with 17 significant digits; parses back to the identical `f64`.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

/// Dumps a corrector: a header line `d=.. L=.. n=.. xi=.. residual=..` followed
/// by one value per line in lexicographic cell order.
pub fn write_corrector<W: Write>(mut out: W, sol: &CorrectorSolution) -> std::io::Result<()> {
    let grid = sol.phi.grid();
    let xi: Vec<String> = sol.direction.components().iter().map(|&x| format_f64(x)).collect();
    writeln!(
        out,
        "d={} L={} n={} xi={} residual={}",
        grid.dim(),
        grid.side_length(),
        grid.cells_per_unit(),
        xi.join(","),
        format_f64(sol.residual_norm)
    )?;
    for &v in sol.phi.values() {
        writeln!(out, "{}", format_f64(v))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn formatted_floats_roundtrip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(format_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_f64(0.4), "4.0000000000000002e-1");
        assert_eq!(format_f64(1.0), "1.0000000000000000e0");
    }
}
