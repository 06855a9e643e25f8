//! Semantic zones: polygonal rooms and corridors, pose-to-zone lookup and
//! route-to-zone prediction.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    boundary_distance, centroid, point_in_polygon, sample_polyline, signed_area, validate_simple,
    BoundingBox, Point2, Pose, BOUNDARY_EPS,
};

/// Default route sampling interval in meters.
pub const DEFAULT_ROUTE_STEP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneId(pub u32);

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    id: ZoneId,
    name: String,
    polygon: Vec<Point2>,
    bbox: BoundingBox,
}

impl Zone {
    /// Builds a zone from a simple polygon. Clockwise input is reversed so the
    /// stored ring is always counter-clockwise.
    pub fn new(id: ZoneId, name: impl Into<String>, mut polygon: Vec<Point2>) -> Result<Self> {
        validate_simple(&polygon).map_err(|reason| Error::InvalidZone { id: id.0, reason })?;
        if signed_area(&polygon) < 0.0 {
            polygon.reverse();
        }
        let bbox = BoundingBox::of(&polygon);
        Ok(Self {
            id,
            name: name.into(),
            polygon,
            bbox,
        })
    }

    /// Axis-aligned rectangle zone, convenient for synthetic worlds and tests.
    pub fn rect(
        id: u32,
        name: impl Into<String>,
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    ) -> Result<Self> {
        Self::new(
            ZoneId(id),
            name,
            vec![
                Point2::new(x0, y0),
                Point2::new(x1, y0),
                Point2::new(x1, y1),
                Point2::new(x0, y1),
            ],
        )
    }

    pub fn id(&self) -> ZoneId {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn polygon(&self) -> &[Point2] {
        &self.polygon
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    pub fn contains(&self, p: &Point2) -> bool {
        self.bbox.contains(p, BOUNDARY_EPS) && point_in_polygon(p, &self.polygon)
    }

    pub fn centroid(&self) -> Point2 {
        centroid(&self.polygon)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.polygon)
    }

    pub fn boundary_distance(&self, p: &Point2) -> f64 {
        boundary_distance(p, &self.polygon)
    }
}

/// Immutable collection of zones ordered by ascending id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZoneSet {
    zones: Vec<Zone>,
}

impl ZoneSet {
    pub fn new(mut zones: Vec<Zone>) -> Result<Self> {
        zones.sort_by_key(|z| z.id);
        if let Some(w) = zones.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::DuplicateZone(w[0].id));
        }
        Ok(Self { zones })
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Zone> {
        self.zones.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = ZoneId> + '_ {
        self.zones.iter().map(|z| z.id)
    }

    pub fn get(&self, id: ZoneId) -> Option<&Zone> {
        self.zones
            .binary_search_by_key(&id, |z| z.id)
            .ok()
            .map(|i| &self.zones[i])
    }

    pub fn contains_id(&self, id: ZoneId) -> bool {
        self.get(id).is_some()
    }

    pub fn by_name(&self, name: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.name == name)
    }

    /// Zone containing `p`; the smallest id wins when zones overlap.
    pub fn locate_point(&self, p: &Point2) -> Option<ZoneId> {
        // zones are sorted, so the first hit is the minimum id
        self.zones.iter().find(|z| z.contains(p)).map(|z| z.id)
    }

    pub fn locate(&self, pose: &Pose) -> Option<ZoneId> {
        self.locate_point(&pose.position)
    }

    /// Zone whose boundary is closest to `p` (ties to the smallest id).
    pub fn nearest(&self, p: &Point2) -> Option<(ZoneId, f64)> {
        let mut best: Option<(ZoneId, f64)> = None;
        for z in &self.zones {
            let d = z.boundary_distance(p);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((z.id, d));
            }
        }
        best
    }

    /// Ordered zone sequence along a route.
    ///
    /// The polyline is sampled every `step` meters (segment endpoints always
    /// included); samples outside every zone are dropped and consecutive
    /// repeats collapsed.
    pub fn predict_route_zones(&self, route: &[Point2], step: f64) -> Result<Vec<ZoneId>> {
        if route.is_empty() {
            return Err(Error::InvalidParameter("route has no waypoints".into()));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "route step {step} must be > 0"
            )));
        }
        let mut out: Vec<ZoneId> = Vec::new();
        for p in sample_polyline(route, step) {
            if let Some(z) = self.locate_point(&p) {
                if out.last() != Some(&z) {
                    out.push(z);
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let file = ZonesFile {
            zones: self
                .zones
                .iter()
                .map(|z| ZoneRecord {
                    id: z.id.0,
                    name: z.name.clone(),
                    polygon: z.polygon.iter().map(|&p| p.into()).collect(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("zone set serializes");
        s.push('\n');
        s
    }

    /// Parses a `zones.json` document; `origin` names the file in error messages.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let file: ZonesFile =
            serde_json::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?;
        let zones = file
            .zones
            .into_iter()
            .map(|r| {
                let polygon = r.polygon.into_iter().map(Point2::from).collect();
                Zone::new(ZoneId(r.id), r.name, polygon).map_err(|e| {
                    Error::format(origin, format!("zone {} field `polygon`: {e}", r.id))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ZoneSet::new(zones).map_err(|e| Error::format(origin, format!("field `id`: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZonesFile {
    zones: Vec<ZoneRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZoneRecord {
    id: u32,
    name: String,
    polygon: Vec<[f64; 2]>,
}
