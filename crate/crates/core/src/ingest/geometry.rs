use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GazeError, Result};

/// Physical display setup used to convert pixels to visual angle.
///
/// Pixels are assumed square, so the physical aspect ratio always equals
/// `width_px : height_px` and only the diagonal needs to be known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenGeometry {
    pub width_px: f64,
    pub height_px: f64,
    pub diagonal_cm: f64,
    pub viewing_distance_cm: f64,
}

impl Default for ScreenGeometry {
    /// 19 inch 1280x1024 display viewed from 57 cm.
    fn default() -> Self {
        ScreenGeometry {
            width_px: 1280.0,
            height_px: 1024.0,
            diagonal_cm: 48.26,
            viewing_distance_cm: 57.0,
        }
    }
}

impl ScreenGeometry {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("width_px", self.width_px),
            ("height_px", self.height_px),
            ("diagonal_cm", self.diagonal_cm),
            ("viewing_distance_cm", self.viewing_distance_cm),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(GazeError::InvalidConfig(format!(
                    "geometry field {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Physical size of one pixel in cm.
    pub fn pixel_pitch_cm(&self) -> f64 {
        self.diagonal_cm / self.width_px.hypot(self.height_px)
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0.0, 0.0, self.width_px, self.height_px)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let g: ScreenGeometry = toml::from_str(text).map_err(|e| GazeError::InvalidConfig(format!("geometry: {e}")))?;
        g.validate()?;
        Ok(g)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GazeError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("geometry serializes")
    }
}

/// Axis-aligned screen rectangle in pixels, half-open on the far edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn centered(cx: f64, cy: f64, width: f64, height: f64) -> Self {
        Rect::new(cx - width / 2.0, cy - height / 2.0, cx + width / 2.0, cy + height / 2.0)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn is_within(&self, outer: &Rect) -> bool {
        self.x0 >= outer.x0 && self.y0 >= outer.y0 && self.x1 <= outer.x1 && self.y1 <= outer.y1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_toml_config() {
        let g = ScreenGeometry::from_toml_str(
            "width_px = 1280\nheight_px = 1024\ndiagonal_cm = 48.26\nviewing_distance_cm = 57.0\n",
        )
        .unwrap();
        assert_eq!(g, ScreenGeometry::default());
    }

    #[test]
    fn rejects_non_positive_fields() {
        let err = ScreenGeometry::from_toml_str(
            "width_px = 1280\nheight_px = 0\ndiagonal_cm = 48.26\nviewing_distance_cm = 57.0\n",
        );
        assert!(matches!(err, Err(GazeError::InvalidConfig(_))));
    }

    #[test]
    fn toml_round_trip() {
        let g = ScreenGeometry::default();
        assert_eq!(ScreenGeometry::from_toml_str(&g.to_toml_string()).unwrap(), g);
    }
}
