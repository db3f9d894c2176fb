//! CSV serialization of point configurations.
//!
//! Header `x1,..,xd` followed by an optional `mark` column; one row per point.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry::point::{Point, PointConfiguration};
use crate::scalar::Scalar;

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("csv: {e}"))
}

pub fn write_csv<T: Scalar, W: Write>(cfg: &PointConfiguration<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=cfg.dim()).map(|i| format!("x{i}")).collect();
    if cfg.marks().is_some() {
        header.push("mark".into());
    }
    w.write_record(&header).map_err(io_err)?;
    for (i, p) in cfg.iter().enumerate() {
        let mut row: Vec<String> = p.coords().iter().map(|c| format!("{c:?}")).collect();
        if let Some(m) = cfg.mark(i) {
            row.push(format!("{m:?}"));
        }
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

pub fn read_csv<T: Scalar, R: Read>(input: R) -> Result<PointConfiguration<T>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(io_err)?.clone();
    let dim = header.iter().filter(|h| h.starts_with('x')).count();
    let has_mark = header.iter().any(|h| h == "mark");
    for (i, h) in header.iter().take(dim).enumerate() {
        if h != format!("x{}", i + 1) {
            return Err(Error::InvalidInput(format!("unexpected column {h:?}")));
        }
    }
    let mut points = Vec::new();
    let mut marks = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io_err)?;
        let vals: Vec<T> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map(T::lit).map_err(io_err))
            .collect::<Result<_>>()?;
        if vals.len() != dim + usize::from(has_mark) {
            return Err(Error::InvalidInput(format!(
                "row has {} fields",
                vals.len()
            )));
        }
        points.push(Point::new(&vals[..dim])?);
        if has_mark {
            marks.push(vals[dim]);
        }
    }
    let cfg = PointConfiguration::from_points(dim, points)?;
    if has_mark {
        cfg.with_marks(marks)
    } else {
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_marks() {
        let cfg = PointConfiguration::from_points(
            2,
            vec![Point::xy(0.1f64, -2.5), Point::xy(1.0 / 3.0, 4.0)],
        )
        .unwrap()
        .with_marks(vec![0.25, 0.75])
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&cfg, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,mark\n"));
        let back: PointConfiguration<f64> = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn round_trip_without_marks() {
        let cfg = PointConfiguration::from_points(1, vec![Point::x(0.5f64)]).unwrap();
        let mut buf = Vec::new();
        write_csv(&cfg, &mut buf).unwrap();
        let back: PointConfiguration<f64> = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, cfg);
    }
}
