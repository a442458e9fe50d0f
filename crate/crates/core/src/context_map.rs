//! The context map: a fixed rectangular grid of context vectors that is
//! organized online by best-matching-unit search and neighborhood updates.
//!
//! Every cell also owns a [`BehaviorTable`], so the map is the complete
//! learned state of the framework and the unit of persistence.
//!
//! Neighborhoods are measured in integer *distance steps*: the Euclidean
//! grid distance rounded to the nearest integer. A cell `d` steps from the
//! center learns at `base_learning_rate * 0.5^d`; cells further away than
//! `neighborhood_radius` are untouched. Grid edges are hard boundaries.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::behavior::{BehaviorId, BehaviorStats, BehaviorTable};
use crate::error::{Error, Result};

pub const DEFAULT_WIDTH: usize = 10;
pub const DEFAULT_HEIGHT: usize = 10;
pub const DEFAULT_LEARNING_RATE: f64 = 1.0;
pub const DEFAULT_RADIUS: u32 = 4;

/// Version tag written into every persisted map document.
pub const MAP_DOCUMENT_VERSION: u32 = 1;

/// A normalized attribute vector describing one measurement of an environment.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ContextVector(Vec<f64>);

impl ContextVector {
    /// Builds a vector, rejecting empty input and values outside `[0, 1]`.
    pub fn new(attrs: Vec<f64>) -> Result<Self> {
        if attrs.is_empty() {
            return Err(Error::InvalidArgument("context vector must not be empty".into()));
        }
        if let Some(bad) = attrs.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "context attribute {bad} outside [0, 1]"
            )));
        }
        Ok(Self(attrs))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl<'de> Deserialize<'de> for ContextVector {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let attrs = Vec::<f64>::deserialize(de)?;
        ContextVector::new(attrs).map_err(serde::de::Error::custom)
    }
}

/// Per-attribute importance modifiers used by [`weighted_distance`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct AttributeWeights(Vec<f64>);

impl AttributeWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Config("attribute weights must not be empty".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("attribute weights must be finite and non-negative".into()));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::Config("at least one attribute weight must be positive".into()));
        }
        Ok(Self(weights))
    }

    /// All-ones weights for `n` attributes.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<'de> Deserialize<'de> for AttributeWeights {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let weights = Vec::<f64>::deserialize(de)?;
        AttributeWeights::new(weights).map_err(serde::de::Error::custom)
    }
}

/// A cell coordinate on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPos {
    pub col: usize,
    pub row: usize,
}

impl GridPos {
    pub fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

impl std::fmt::Display for GridPos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

/// Sum of squared attribute differences, each scaled by its weight.
pub fn weighted_distance(a: &ContextVector, b: &ContextVector, w: &AttributeWeights) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), actual: b.len() });
    }
    if w.len() != a.len() {
        return Err(Error::LengthMismatch { expected: a.len(), actual: w.len() });
    }
    Ok(raw_distance(a.as_slice(), b.as_slice(), w.as_slice()))
}

#[inline]
fn raw_distance(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(w)
        .map(|((x, y), w)| w * (x - y) * (x - y))
        .sum()
}

/// Integer distance steps between two grid cells: the rounded Euclidean distance.
pub fn grid_step_distance(p: GridPos, q: GridPos) -> u32 {
    let dc = p.col.abs_diff(q.col) as f64;
    let dr = p.row.abs_diff(q.row) as f64;
    (dc * dc + dr * dr).sqrt().round() as u32
}

/// Construction parameters for a [`ContextMap`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapParams {
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_height")]
    pub height: usize,
    #[serde(default = "default_attr_count")]
    pub attr_count: usize,
    /// Defaults to all-ones when omitted.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_radius")]
    pub radius: u32,
}

fn default_width() -> usize {
    DEFAULT_WIDTH
}
fn default_height() -> usize {
    DEFAULT_HEIGHT
}
fn default_attr_count() -> usize {
    1
}
fn default_learning_rate() -> f64 {
    DEFAULT_LEARNING_RATE
}
fn default_radius() -> u32 {
    DEFAULT_RADIUS
}

impl Default for MapParams {
    fn default() -> Self {
        Self {
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            attr_count: 1,
            weights: None,
            learning_rate: DEFAULT_LEARNING_RATE,
            radius: DEFAULT_RADIUS,
        }
    }
}

impl MapParams {
    pub fn attribute_weights(&self) -> Result<AttributeWeights> {
        match &self.weights {
            Some(w) => AttributeWeights::new(w.clone()),
            None => AttributeWeights::uniform(self.attr_count),
        }
    }

    pub fn build(&self, seed: u64) -> Result<ContextMap> {
        Ok(ContextMap::new(self.width, self.height, self.attr_count, self.attribute_weights()?, seed)?
            .with_learning_rate(self.learning_rate)?
            .with_radius(self.radius))
    }
}

/// One grid position: its prototype vector and its behavior tallies.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub vector: ContextVector,
    pub behaviors: BehaviorTable,
}

/// The grid of context cells plus the parameters that govern its updates.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextMap {
    width: usize,
    height: usize,
    attr_count: usize,
    weights: AttributeWeights,
    base_learning_rate: f64,
    neighborhood_radius: u32,
    rng_seed: u64,
    cells: Vec<Cell>,
}

impl ContextMap {
    /// A `width x height` map whose attributes are drawn uniformly from
    /// `[0, 1]` by a generator seeded with `seed`. Behavior tables start empty.
    pub fn new(
        width: usize,
        height: usize,
        attr_count: usize,
        weights: AttributeWeights,
        seed: u64,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config(format!("grid must be at least 1x1, got {width}x{height}")));
        }
        if attr_count == 0 {
            return Err(Error::Config("attribute count must be at least 1".into()));
        }
        if weights.len() != attr_count {
            return Err(Error::Config(format!(
                "{} attribute weights given for {attr_count} attributes",
                weights.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells = (0..width * height)
            .map(|_| {
                let attrs = (0..attr_count).map(|_| rng.random::<f64>()).collect();
                Cell { vector: ContextVector(attrs), behaviors: BehaviorTable::default() }
            })
            .collect();
        Ok(Self {
            width,
            height,
            attr_count,
            weights,
            base_learning_rate: DEFAULT_LEARNING_RATE,
            neighborhood_radius: DEFAULT_RADIUS,
            rng_seed: seed,
            cells,
        })
    }

    pub fn with_learning_rate(mut self, rate: f64) -> Result<Self> {
        self.set_learning_rate(rate)?;
        Ok(self)
    }

    pub fn with_radius(mut self, radius: u32) -> Self {
        self.neighborhood_radius = radius;
        self
    }

    /// Accepts any rate in `[0, 1]`; zero freezes the vectors.
    pub fn set_learning_rate(&mut self, rate: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::Config(format!("learning rate {rate} outside [0, 1]")));
        }
        self.base_learning_rate = rate;
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn attr_count(&self) -> usize {
        self.attr_count
    }

    pub fn weights(&self) -> &AttributeWeights {
        &self.weights
    }

    pub fn base_learning_rate(&self) -> f64 {
        self.base_learning_rate
    }

    pub fn neighborhood_radius(&self) -> u32 {
        self.neighborhood_radius
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn contains(&self, pos: GridPos) -> bool {
        pos.col < self.width && pos.row < self.height
    }

    /// Row-major index of `pos`.
    pub fn index_of(&self, pos: GridPos) -> usize {
        pos.row * self.width + pos.col
    }

    pub fn pos_of(&self, index: usize) -> GridPos {
        GridPos { col: index % self.width, row: index / self.width }
    }

    pub fn cell(&self, pos: GridPos) -> Option<&Cell> {
        self.contains(pos).then(|| &self.cells[self.index_of(pos)])
    }

    pub fn cell_mut(&mut self, pos: GridPos) -> Option<&mut Cell> {
        if self.contains(pos) {
            let i = self.index_of(pos);
            Some(&mut self.cells[i])
        } else {
            None
        }
    }

    /// Learning rate applied `steps` distance steps from the center cell.
    pub fn effective_rate(&self, steps: u32) -> f64 {
        self.base_learning_rate * neighborhood_weight(steps)
    }

    /// Row-major indices and step distances of every cell within the
    /// neighborhood radius of `center`.
    pub fn neighborhood(&self, center: GridPos) -> impl Iterator<Item = (usize, u32)> + '_ {
        let r = self.neighborhood_radius as usize;
        let rows = center.row.saturating_sub(r)..=(center.row + r).min(self.height - 1);
        rows.flat_map(move |row| {
            let cols = center.col.saturating_sub(r)..=(center.col + r).min(self.width - 1);
            cols.map(move |col| GridPos { col, row })
        })
        .filter_map(move |pos| {
            let d = grid_step_distance(pos, center);
            (d <= self.neighborhood_radius).then(|| (self.index_of(pos), d))
        })
    }

    fn check_input(&self, input: &ContextVector) -> Result<()> {
        if input.len() != self.attr_count {
            return Err(Error::LengthMismatch { expected: self.attr_count, actual: input.len() });
        }
        Ok(())
    }

    /// Weighted distance from `input` to every cell, in row-major order.
    pub fn distances(&self, input: &ContextVector) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let w = self.weights.as_slice();
        Ok(self
            .cells
            .iter()
            .map(|c| raw_distance(c.vector.as_slice(), input.as_slice(), w))
            .collect())
    }

    /// The cell closest to `input`. Ties resolve to the lowest row-major index.
    pub fn best_matching_unit(&self, input: &ContextVector) -> Result<GridPos> {
        self.check_input(input)?;
        let w = self.weights.as_slice();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, cell) in self.cells.iter().enumerate() {
            let d = raw_distance(cell.vector.as_slice(), input.as_slice(), w);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        Ok(self.pos_of(best))
    }

    /// Moves the BMU and its neighborhood toward `input` and returns the BMU.
    pub fn update(&mut self, input: &ContextVector) -> Result<GridPos> {
        let bmu = self.best_matching_unit(input)?;
        let targets: Vec<(usize, u32)> = self.neighborhood(bmu).collect();
        for (i, d) in targets {
            let rate = self.effective_rate(d);
            for (c, x) in self.cells[i].vector.0.iter_mut().zip(input.as_slice()) {
                *c = (*c + rate * (x - *c)).clamp(0.0, 1.0);
            }
        }
        Ok(bmu)
    }

    pub fn to_document(&self) -> MapDocument {
        MapDocument {
            version: MAP_DOCUMENT_VERSION,
            width: self.width,
            height: self.height,
            attr_count: self.attr_count,
            weights: self.weights.as_slice().to_vec(),
            base_learning_rate: self.base_learning_rate,
            neighborhood_radius: self.neighborhood_radius,
            rng_seed: self.rng_seed,
            cells: self
                .cells
                .iter()
                .map(|c| CellDocument {
                    attrs: c.vector.as_slice().to_vec(),
                    behaviors: BehaviorId::ALL
                        .iter()
                        .map(|id| {
                            let s = c.behaviors.stats(*id);
                            (
                                id.to_string(),
                                StatsDocument { pos: s.weighted_positive, total: s.weighted_total },
                            )
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: MapDocument) -> Result<Self> {
        let bad = |msg: String| Error::Decode(msg);
        if doc.version != MAP_DOCUMENT_VERSION {
            return Err(bad(format!("unsupported map document version {}", doc.version)));
        }
        if doc.width == 0 || doc.height == 0 || doc.attr_count == 0 {
            return Err(bad("grid dimensions and attribute count must be positive".into()));
        }
        if doc.cells.len() != doc.width * doc.height {
            return Err(bad(format!(
                "expected {} cells, found {}",
                doc.width * doc.height,
                doc.cells.len()
            )));
        }
        let weights = AttributeWeights::new(doc.weights).map_err(|e| bad(e.to_string()))?;
        if weights.len() != doc.attr_count {
            return Err(bad("weight count does not match attribute count".into()));
        }
        if !(0.0..=1.0).contains(&doc.base_learning_rate) {
            return Err(bad("learning rate outside [0, 1]".into()));
        }
        let mut cells = Vec::with_capacity(doc.cells.len());
        for (i, cell) in doc.cells.into_iter().enumerate() {
            if cell.attrs.len() != doc.attr_count {
                return Err(bad(format!("cell {i} has {} attributes", cell.attrs.len())));
            }
            let vector = ContextVector::new(cell.attrs).map_err(|e| bad(format!("cell {i}: {e}")))?;
            if cell.behaviors.len() != BehaviorId::ALL.len() {
                return Err(bad(format!("cell {i} must list exactly four behaviors")));
            }
            let mut behaviors = BehaviorTable::default();
            for (key, s) in cell.behaviors {
                let id = key
                    .parse::<u8>()
                    .ok()
                    .and_then(|v| BehaviorId::new(v).ok())
                    .ok_or_else(|| bad(format!("cell {i}: unknown behavior id `{key}`")))?;
                let stats = BehaviorStats::new(s.pos, s.total)
                    .map_err(|e| bad(format!("cell {i}, behavior {id}: {e}")))?;
                *behaviors.stats_mut(id) = stats;
            }
            cells.push(Cell { vector, behaviors });
        }
        Ok(Self {
            width: doc.width,
            height: doc.height,
            attr_count: doc.attr_count,
            weights,
            base_learning_rate: doc.base_learning_rate,
            neighborhood_radius: doc.neighborhood_radius,
            rng_seed: doc.rng_seed,
            cells,
        })
    }

    /// Serializes the map as a JSON persistence document.
    pub fn encode(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("map document serializes")
    }

    pub fn decode(text: &str) -> Result<Self> {
        let doc: MapDocument =
            serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))?;
        Self::from_document(doc)
    }

    /// SHA-256 of the encoded document, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.encode().as_bytes()))
    }
}

/// `0.5^steps`, the neighborhood attenuation shared by vector and vote updates.
pub fn neighborhood_weight(steps: u32) -> f64 {
    0.5f64.powi(steps as i32)
}

/// Free-function form of [`ContextMap::best_matching_unit`].
pub fn best_matching_unit(map: &ContextMap, input: &ContextVector) -> Result<GridPos> {
    map.best_matching_unit(input)
}

/// Free-function form of [`ContextMap::update`].
pub fn update_map(map: &mut ContextMap, input: &ContextVector) -> Result<GridPos> {
    map.update(input)
}

/// Versioned persistence form of a [`ContextMap`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDocument {
    pub version: u32,
    pub width: usize,
    pub height: usize,
    pub attr_count: usize,
    pub weights: Vec<f64>,
    pub base_learning_rate: f64,
    pub neighborhood_radius: u32,
    pub rng_seed: u64,
    pub cells: Vec<CellDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellDocument {
    pub attrs: Vec<f64>,
    pub behaviors: BTreeMap<String, StatsDocument>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsDocument {
    pub pos: f64,
    pub total: f64,
}
