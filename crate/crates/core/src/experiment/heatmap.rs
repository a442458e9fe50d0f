use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::behavior::top_behavior;
use crate::context_map::ContextMap;
use crate::error::{Error, Result};

/// Which per-cell quantity a heatmap shows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Attribute { index: usize },
    TopBehavior,
}

impl FromStr for Layer {
    type Err = Error;

    /// Accepts `behavior`, `top_behavior`, `attribute` and `attribute:<i>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "behavior" | "top_behavior" => Ok(Layer::TopBehavior),
            "attribute" => Ok(Layer::Attribute { index: 0 }),
            _ => s
                .strip_prefix("attribute:")
                .and_then(|i| i.parse().ok())
                .map(|index| Layer::Attribute { index })
                .ok_or_else(|| Error::InvalidArgument(format!("unknown layer `{s}`"))),
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layer::Attribute { index } => write!(f, "attribute:{index}"),
            Layer::TopBehavior => f.write_str("behavior"),
        }
    }
}

/// A `height` x `width` grid of cell values, rows top to bottom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDocument {
    pub layer: Layer,
    pub width: usize,
    pub height: usize,
    pub values: Vec<Vec<f64>>,
}

/// Colors of behavior ids 0..=3: dark, light blue, yellow, red.
pub const BEHAVIOR_PALETTE: [[u8; 3]; 4] = [[32, 32, 48], [135, 206, 250], [250, 220, 40], [220, 40, 40]];

const ASCII_RAMP: &[u8] = b" .:-=+*#%@";

impl GridDocument {
    pub fn from_map(map: &ContextMap, layer: Layer) -> Result<Self> {
        if let Layer::Attribute { index } = layer {
            if index >= map.attr_count() {
                return Err(Error::InvalidArgument(format!(
                    "attribute {index} out of range for a map with {} attributes",
                    map.attr_count()
                )));
            }
        }
        let values = map
            .cells()
            .chunks(map.width())
            .map(|row| {
                row.iter()
                    .map(|cell| match layer {
                        Layer::Attribute { index } => cell.vector.as_slice()[index],
                        Layer::TopBehavior => top_behavior(&cell.behaviors).index() as f64,
                    })
                    .collect()
            })
            .collect();
        Ok(Self { layer, width: map.width(), height: map.height(), values })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("grid serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))?;
        if doc.values.len() != doc.height || doc.values.iter().any(|r| r.len() != doc.width) {
            return Err(Error::Decode("grid shape does not match its dimensions".into()));
        }
        Ok(doc)
    }

    fn color(&self, v: f64) -> [u8; 3] {
        match self.layer {
            Layer::TopBehavior => BEHAVIOR_PALETTE[(v as usize).min(3)],
            Layer::Attribute { .. } => {
                let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
                [g, g, g]
            }
        }
    }

    /// Binary (P6) pixmap with each cell drawn as a `scale` x `scale` block.
    pub fn to_ppm(&self, scale: usize) -> Vec<u8> {
        let scale = scale.max(1);
        let (w, h) = (self.width * scale, self.height * scale);
        let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
        out.reserve(w * h * 3);
        for row in &self.values {
            for _ in 0..scale {
                for &v in row {
                    let rgb = self.color(v);
                    for _ in 0..scale {
                        out.extend_from_slice(&rgb);
                    }
                }
            }
        }
        out
    }

    /// One character per cell: the id for behaviors, a density ramp for attributes.
    pub fn to_ascii(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for row in &self.values {
            for &v in row {
                s.push(match self.layer {
                    Layer::TopBehavior => char::from(b'0' + (v as u8).min(3)),
                    Layer::Attribute { .. } => {
                        let i = (v.clamp(0.0, 1.0) * (ASCII_RAMP.len() - 1) as f64).round() as usize;
                        char::from(ASCII_RAMP[i])
                    }
                });
            }
            s.push('\n');
        }
        s
    }
}

/// Grid document plus its pixmap rendering.
pub fn export_heatmap(map: &ContextMap, layer: Layer) -> Result<(GridDocument, Vec<u8>)> {
    let doc = GridDocument::from_map(map, layer)?;
    let ppm = doc.to_ppm(16);
    Ok((doc, ppm))
}
