use std::io::{self, BufRead, Write};

use nalgebra::DVector;

use super::SpecError;
use crate::code_tree::WeightedPoint;
use crate::dimension::PressureCurve;

/// Rows `s,p,diag`.
pub fn write_pressure_csv<W: Write>(mut w: W, curve: &PressureCurve) -> io::Result<()> {
    writeln!(w, "s,p,diag")?;
    for pt in &curve.points {
        writeln!(w, "{},{},{}", pt.s, pt.p, pt.diagnostic)?;
    }
    Ok(())
}

/// Rows `x1,…,xd,weight`.
pub fn write_points_csv<W: Write>(mut w: W, points: &[WeightedPoint]) -> io::Result<()> {
    let d = points.first().map_or(0, |p| p.point.len());
    let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).chain(["weight".to_string()]).collect();
    writeln!(w, "{}", header.join(","))?;
    for p in points {
        for x in p.point.iter() {
            write!(w, "{x},")?;
        }
        writeln!(w, "{}", p.weight)?;
    }
    Ok(())
}

/// Rows `index,gap`, indices from 1.
pub fn write_gaps_csv<W: Write>(mut w: W, gaps: &[usize]) -> io::Result<()> {
    writeln!(w, "index,gap")?;
    for (i, g) in gaps.iter().enumerate() {
        writeln!(w, "{},{g}", i + 1)?;
    }
    Ok(())
}

/// Read a point cloud. A header line is optional; a column named `weight`
/// is dropped. Without a header every column is a coordinate.
pub fn read_points_csv<R: BufRead>(r: R) -> Result<Vec<DVector<f64>>, SpecError> {
    let mut points = Vec::new();
    let mut keep: Option<Vec<bool>> = None;
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| SpecError::Read {
            path: "points".into(),
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = cells.iter().map(|c| c.parse::<f64>()).collect();
        match (parsed, &keep) {
            (Err(_), None) if points.is_empty() => {
                keep = Some(cells.iter().map(|c| *c != "weight").collect());
            }
            (Ok(values), _) => {
                let mask = keep.get_or_insert_with(|| vec![true; values.len()]);
                if values.len() != mask.len() {
                    return Err(super::invalid(
                        format!("line {}", n + 1),
                        format!("expected {} columns, got {}", mask.len(), values.len()),
                    ));
                }
                let coords: Vec<f64> = values.iter().zip(mask.iter()).filter(|(_, k)| **k).map(|(v, _)| *v).collect();
                if coords.iter().any(|x| !x.is_finite()) {
                    return Err(super::invalid(format!("line {}", n + 1), "non-finite coordinate"));
                }
                points.push(DVector::from_vec(coords));
            }
            (Err(e), _) => return Err(super::invalid(format!("line {}", n + 1), e.to_string())),
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::PressurePoint;

    #[test]
    fn pressure_rows() {
        let curve = PressureCurve {
            k: 2,
            points: vec![PressurePoint {
                s: 0.5,
                p: -0.25,
                diagnostic: 0.0,
                std_error: None,
            }],
        };
        let mut out = Vec::new();
        write_pressure_csv(&mut out, &curve).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "s,p,diag\n0.5,-0.25,0\n");
    }

    #[test]
    fn points_round_trip() {
        let pts = vec![
            WeightedPoint {
                point: DVector::from_vec(vec![0.1, 1.0 / 3.0]),
                weight: 0.5,
            },
            WeightedPoint {
                point: DVector::from_vec(vec![-2.0, 1e-300]),
                weight: 0.5,
            },
        ];
        let mut out = Vec::new();
        write_points_csv(&mut out, &pts).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("x1,x2,weight\n"));
        let back = read_points_csv(text.as_bytes()).unwrap();
        assert_eq!(back, pts.iter().map(|p| p.point.clone()).collect::<Vec<_>>());
    }

    #[test]
    fn headerless_and_bad_rows() {
        let back = read_points_csv("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(back.len(), 2);
        assert!(read_points_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(read_points_csv("1,2\nx,4\n".as_bytes()).is_err());
    }

    #[test]
    fn gap_rows() {
        let mut out = Vec::new();
        write_gaps_csv(&mut out, &[3, 1]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "index,gap\n1,3\n2,1\n");
    }
}
