//! Row-major CSV dumps of operators, one decoded window per row.

use std::io::Write;

use ndarray::ArrayView2;

use super::indexer::{PastIndexer, TrajIndexer};
use crate::error::Result;
use crate::scalar::Real;

/// Writes `m` with a `window` column naming each row and the given column
/// labels as header.
pub fn write_matrix_csv<T: Real, W: Write>(
    out: &mut W,
    m: ArrayView2<'_, T>,
    indexer: &TrajIndexer,
    col_labels: &[String],
) -> Result<()> {
    write!(out, "window")?;
    for l in col_labels {
        write!(out, ",{l}")?;
    }
    writeln!(out)?;
    for (i, row) in m.rows().into_iter().enumerate() {
        write!(out, "{}", indexer.label(i))?;
        for x in row {
            write!(out, ",{:e}", x.as_f64())?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Column labels `s=0..s=S-1` for a forward emission.
pub fn state_labels(states: usize) -> Vec<String> {
    (0..states).map(|s| format!("s={s}")).collect()
}

/// Column labels for a square operator on windows.
pub fn window_labels(indexer: &TrajIndexer) -> Vec<String> {
    (0..indexer.rows()).map(|i| indexer.label(i)).collect()
}

/// Column labels for a past-window matrix.
pub fn past_labels(past: &PastIndexer) -> Vec<String> {
    (0..past.cols()).map(|c| past.label(c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn csv_layout() {
        let ix = TrajIndexer::new(2, 1, 0);
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, array![[1.0, 0.0], [0.0, 0.5]].view(), &ix, &state_labels(2)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "window,s=0,s=1\no=0|a=,1e0,0e0\no=1|a=,0e0,5e-1\n");
    }
}
