//! Plain-text result emission.
//!
//! Numbers are written in Rust's shortest round-trip scientific notation
//! (`1.5e-3`), which is locale independent and loses no precision.

use std::io::{self, Write};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// Writes `header` followed by one comma-separated line per row.
pub fn write_csv<W, R>(out: &mut W, header: &str, rows: R) -> io::Result<()>
where
    W: Write,
    R: IntoIterator,
    R::Item: AsRef<[f64]>,
{
    writeln!(out, "{header}")?;
    for row in rows {
        let line: Vec<String> = row.as_ref().iter().map(|&x| fmt_f64(x)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn csv_string<R>(header: &str, rows: R) -> String
where
    R: IntoIterator,
    R::Item: AsRef<[f64]>,
{
    let mut buf = Vec::new();
    write_csv(&mut buf, header, rows).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("csv output is ascii")
}

pub const DEVICE_TRACE_HEADER: &str = "t_s,v_V,i_A,g_S";
pub const DPI_TRACE_HEADER: &str = "t_s,i_syn_A";
pub const STDP_HEADER: &str = "delta_t_s,xi_S";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1e-3, -2.5e-12, 4e10, 1.0 / 3.0, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(4e10), "4e10");
    }

    #[test]
    fn csv_layout() {
        let s = csv_string("a,b", [[1.0, 2.0], [0.5, -1.0]]);
        assert_eq!(s, "a,b\n1e0,2e0\n5e-1,-1e0\n");
    }
}
