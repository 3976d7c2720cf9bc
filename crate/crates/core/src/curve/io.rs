use std::io::Read;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{ParametricCurve, WaypointSet};
use crate::error::{Error, Result};

/// JSON form of a [`ParametricCurve`].
///
/// `segments[k][axis][p]` is the coefficient of `(θ − knots[k])^p`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CurveDocument {
    pub dimension: usize,
    pub knots: Vec<f64>,
    pub segments: Vec<Vec<Vec<f64>>>,
    pub basis: String,
    pub continuity: usize,
}

impl CurveDocument {
    pub fn from_curve(c: &ParametricCurve) -> Self {
        CurveDocument {
            dimension: crate::curve::Curve::dimension(c),
            knots: c.knots().to_vec(),
            segments: c.coefficients().to_vec(),
            basis: "power".into(),
            continuity: crate::curve::Curve::continuity_class(c),
        }
    }

    pub fn into_curve(self) -> Result<ParametricCurve> {
        if self.basis != "power" {
            return Err(Error::Parse(format!("unsupported basis '{}'", self.basis)));
        }
        ParametricCurve::new(self.dimension, self.knots, self.segments, self.continuity)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Reads `x,y[,z]` rows; a non-numeric first row is treated as a header.
pub fn read_waypoints_csv<R: Read>(reader: R) -> Result<WaypointSet> {
    let rows = crate::io::read_numeric_rows(reader)?;
    let dim = rows.first().map(|r| r.len()).unwrap_or(0);
    if dim != 2 && dim != 3 {
        return Err(Error::Parse(format!("waypoint rows must have 2 or 3 columns, found {dim}")));
    }
    let mut pts = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::Parse(format!("row {} has {} columns, expected {dim}", i + 1, r.len())));
        }
        pts.push(Vector3::new(r[0], r[1], if dim == 3 { r[2] } else { 0.0 }));
    }
    WaypointSet::new(dim, pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{interpolate, Curve};

    #[test]
    fn json_round_trip() {
        let w = WaypointSet::planar(&[[0.0, 0.0], [1.0, 0.5], [2.0, 0.0], [3.0, 1.0]]).unwrap();
        let c = interpolate(&w, 2).unwrap();
        let doc = CurveDocument::from_curve(&c);
        let back = CurveDocument::from_json(&doc.to_json().unwrap()).unwrap().into_curve().unwrap();
        assert_eq!(back, c);
        assert_eq!(back.continuity_class(), 2);
    }

    #[test]
    fn csv_with_header() {
        let w = read_waypoints_csv("x,y\n0,0\n1,1\n2,0\n".as_bytes()).unwrap();
        assert_eq!(w.points().len(), 3);
        assert!(read_waypoints_csv("0,0,0\n1,1\n".as_bytes()).is_err());
    }
}
