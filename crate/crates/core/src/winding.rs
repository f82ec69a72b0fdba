//! Winding layouts on a hexagonally packed bobbin cross-section.
//!
//! The window is a lattice of wire slots. Layers stack radially (`y`) with
//! pitch `d·√3/2`; even layers hold `window_columns` slots at `x = c·d`, odd
//! layers hold `window_columns − 1` slots nested at `x = (c + ½)·d`. A layout
//! lists the slot centre of every turn in the order the turns were wound.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Perimeter of the innermost turn, in millimetres. Turn lengths grow by
/// `2π·y` per unit of radial height above it.
pub const CORE_PERIMETER_MM: f64 = 60.0;

/// Half-width, in columns, of the slot neighbourhood the scatter winder
/// searches around its traverse position.
pub const SCATTER_NEIGHBORHOOD_COLUMNS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    /// Boustrophedon layer-by-layer fill.
    Machine,
    /// Gaussian traverse jitter with gravity-supported placement.
    Scatter,
}

impl std::str::FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "machine" => Ok(Pattern::Machine),
            "scatter" => Ok(Pattern::Scatter),
            other => Err(Error::InvalidInput(format!(
                "unknown winding pattern {other:?} (expected machine or scatter)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingSpec {
    pub n_turns: usize,
    /// Outer diameter including enamel, mm.
    pub wire_diameter: f64,
    /// Slots in an even layer.
    pub window_columns: usize,
    pub max_layers: usize,
    pub pattern: Pattern,
    /// Standard deviation of the per-turn traverse step, in columns.
    pub scatter_traverse_sigma: f64,
    pub seed: u64,
}

impl Default for WindingSpec {
    fn default() -> Self {
        Self {
            n_turns: 64,
            wire_diameter: 0.07,
            window_columns: 8,
            max_layers: 64,
            pattern: Pattern::Scatter,
            scatter_traverse_sigma: 0.75,
            seed: 0,
        }
    }
}

impl WindingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_turns < 3 {
            return Err(Error::InvalidInput(format!(
                "n_turns must be at least 3, got {}",
                self.n_turns
            )));
        }
        if !(self.wire_diameter.is_finite() && self.wire_diameter > 0.0) {
            return Err(Error::InvalidInput(format!(
                "wire_diameter must be positive and finite, got {}",
                self.wire_diameter
            )));
        }
        if self.window_columns < 2 {
            return Err(Error::InvalidInput(format!(
                "window_columns must be at least 2 so odd layers exist, got {}",
                self.window_columns
            )));
        }
        if self.max_layers < 1 {
            return Err(Error::InvalidInput("max_layers must be at least 1".into()));
        }
        if !(self.scatter_traverse_sigma.is_finite() && self.scatter_traverse_sigma >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "scatter_traverse_sigma must be finite and nonnegative, got {}",
                self.scatter_traverse_sigma
            )));
        }
        let capacity = self.capacity();
        if self.n_turns > self.max_layers.saturating_mul(self.window_columns) || self.n_turns > capacity {
            return Err(Error::CapacityExceeded {
                n_turns: self.n_turns,
                capacity,
            });
        }
        Ok(())
    }

    pub fn slots_in_layer(&self, layer: usize) -> usize {
        if layer.is_multiple_of(2) {
            self.window_columns
        } else {
            self.window_columns - 1
        }
    }

    /// Number of lattice slots in `max_layers` layers.
    pub fn capacity(&self) -> usize {
        let even = self.max_layers.div_ceil(2);
        let odd = self.max_layers / 2;
        even * self.window_columns + odd * self.window_columns.saturating_sub(1)
    }

    pub fn layer_pitch(&self) -> f64 {
        self.wire_diameter * 3f64.sqrt() / 2.0
    }

    /// Slot position in units of the wire diameter along the axis.
    fn slot_column(&self, layer: usize, index: usize) -> f64 {
        if layer.is_multiple_of(2) {
            index as f64
        } else {
            index as f64 + 0.5
        }
    }

    fn slot_position(&self, layer: usize, index: usize) -> [f64; 2] {
        [
            self.slot_column(layer, index) * self.wire_diameter,
            layer as f64 * self.layer_pitch(),
        ]
    }

    fn turn_length(&self, layer: usize) -> f64 {
        CORE_PERIMETER_MM + std::f64::consts::TAU * layer as f64 * self.layer_pitch()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindingLayout {
    pub spec: WindingSpec,
    /// Slot centres `[x, y]` in mm, indexed by winding order.
    pub positions: Vec<[f64; 2]>,
    /// Circumference proxy per turn, mm.
    pub turn_length: Vec<f64>,
}

impl WindingLayout {
    pub fn n_turns(&self) -> usize {
        self.positions.len()
    }

    /// Rebuilds a layout from stored parts, checking the packing invariants.
    pub fn from_parts(spec: WindingSpec, positions: Vec<[f64; 2]>, turn_length: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if positions.len() != spec.n_turns || turn_length.len() != spec.n_turns {
            return Err(Error::InvalidInput(format!(
                "layout has {} positions and {} turn lengths for {} turns",
                positions.len(),
                turn_length.len(),
                spec.n_turns
            )));
        }
        let layout = Self {
            spec,
            positions,
            turn_length,
        };
        layout.check_packing()?;
        Ok(layout)
    }

    /// Errors if any coordinate is non-finite or two turns overlap.
    pub fn check_packing(&self) -> Result<()> {
        if let Some(i) = self
            .positions
            .iter()
            .position(|p| !(p[0].is_finite() && p[1].is_finite()))
        {
            return Err(Error::InvalidInput(format!("turn {i} has a non-finite position")));
        }
        let min_sep = self.spec.wire_diameter * (1.0 - 1e-9);
        for i in 0..self.positions.len() {
            for j in i + 1..self.positions.len() {
                if distance(self.positions[i], self.positions[j]) < min_sep {
                    return Err(Error::InvalidInput(format!("turns {i} and {j} overlap")));
                }
            }
        }
        Ok(())
    }

    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.positions.len() {
            for j in i + 1..self.positions.len() {
                best = best.min(distance(self.positions[i], self.positions[j]));
            }
        }
        best
    }

    /// SHA-256 over the canonical byte encoding of the layout.
    ///
    /// Encoding, all little-endian: `n_turns` u64, `wire_diameter` f64,
    /// `window_columns` u64, `max_layers` u64, pattern u8 (0 machine,
    /// 1 scatter), `scatter_traverse_sigma` f64, `seed` u64, then `x`, `y`
    /// as f64 for each turn in winding order.
    pub fn hash(&self) -> [u8; 32] {
        let s = &self.spec;
        let mut h = Sha256::new();
        h.update((s.n_turns as u64).to_le_bytes());
        h.update(s.wire_diameter.to_le_bytes());
        h.update((s.window_columns as u64).to_le_bytes());
        h.update((s.max_layers as u64).to_le_bytes());
        h.update([match s.pattern {
            Pattern::Machine => 0u8,
            Pattern::Scatter => 1u8,
        }]);
        h.update(s.scatter_traverse_sigma.to_le_bytes());
        h.update(s.seed.to_le_bytes());
        for p in &self.positions {
            h.update(p[0].to_le_bytes());
            h.update(p[1].to_le_bytes());
        }
        h.finalize().into()
    }

    pub fn hash_hex(&self) -> String {
        hex::encode(self.hash())
    }
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn generate_layout(spec: &WindingSpec) -> Result<WindingLayout> {
    spec.validate()?;
    let slots = match spec.pattern {
        Pattern::Machine => machine_slots(spec),
        Pattern::Scatter => scatter_slots(spec)?,
    };
    let positions = slots.iter().map(|&(l, i)| spec.slot_position(l, i)).collect();
    let turn_length = slots.iter().map(|&(l, _)| spec.turn_length(l)).collect();
    Ok(WindingLayout {
        spec: spec.clone(),
        positions,
        turn_length,
    })
}

fn machine_slots(spec: &WindingSpec) -> Vec<(usize, usize)> {
    let mut slots = Vec::with_capacity(spec.n_turns);
    let mut layer = 0;
    while slots.len() < spec.n_turns {
        let count = spec.slots_in_layer(layer);
        let remaining = spec.n_turns - slots.len();
        let take = count.min(remaining);
        if layer.is_multiple_of(2) {
            slots.extend((0..take).map(|i| (layer, i)));
        } else {
            slots.extend((0..count).rev().take(take).map(|i| (layer, i)));
        }
        layer += 1;
    }
    slots
}

/// Occupancy grid for the scatter winder.
struct SlotGrid<'a> {
    spec: &'a WindingSpec,
    occupied: Vec<Vec<bool>>,
}

impl<'a> SlotGrid<'a> {
    fn new(spec: &'a WindingSpec) -> Self {
        let occupied = (0..spec.max_layers)
            .map(|l| vec![false; spec.slots_in_layer(l)])
            .collect();
        Self { spec, occupied }
    }

    /// Layer 0 rests on the bobbin; higher slots need an occupied slot
    /// among the two they nest between.
    fn supported(&self, layer: usize, index: usize) -> bool {
        if layer == 0 {
            return true;
        }
        let below = &self.occupied[layer - 1];
        let under = if layer % 2 == 1 {
            // odd slot c sits on even slots c and c+1
            [Some(index), Some(index + 1)]
        } else {
            // even slot c sits on odd slots c-1 and c
            [index.checked_sub(1), Some(index)]
        };
        under
            .into_iter()
            .flatten()
            .any(|u| below.get(u).copied().unwrap_or(false))
    }

    /// Lowest free supported slot with column within `radius` of `target`;
    /// ties go to the nearer column, then the smaller one.
    fn best_slot(&self, target: f64, radius: f64) -> Option<(usize, usize)> {
        for (layer, row) in self.occupied.iter().enumerate() {
            let mut best: Option<(f64, f64, usize)> = None;
            for (index, &taken) in row.iter().enumerate() {
                if taken {
                    continue;
                }
                let column = self.spec.slot_column(layer, index);
                let offset = (column - target).abs();
                if offset > radius || !self.supported(layer, index) {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bo, bc, _)) => offset < bo || (offset == bo && column < bc),
                };
                if better {
                    best = Some((offset, column, index));
                }
            }
            if let Some((_, _, index)) = best {
                return Some((layer, index));
            }
        }
        None
    }
}

/// Scatter winder: the traverse advances one column per turn plus a
/// Gaussian jitter of `scatter_traverse_sigma` columns, wrapping modulo the
/// window width; each turn drops into the lowest free supported slot within
/// [`SCATTER_NEIGHBORHOOD_COLUMNS`] of the traverse, or anywhere in the
/// window if that neighbourhood is exhausted.
fn scatter_slots(spec: &WindingSpec) -> Result<Vec<(usize, usize)>> {
    let mut rng = SplitMix64::new(spec.seed);
    let mut grid = SlotGrid::new(spec);
    let width = spec.window_columns as f64;
    let mut traverse = 0.0f64;
    let mut slots = Vec::with_capacity(spec.n_turns);
    for step in 0..spec.n_turns {
        if step > 0 {
            traverse = (traverse + 1.0 + spec.scatter_traverse_sigma * rng.next_normal()).rem_euclid(width);
        }
        let slot = grid
            .best_slot(traverse, SCATTER_NEIGHBORHOOD_COLUMNS)
            .or_else(|| grid.best_slot(traverse, f64::INFINITY))
            .ok_or(Error::ScatterDeadlock { seed: spec.seed, step })?;
        grid.occupied[slot.0][slot.1] = true;
        slots.push(slot);
    }
    Ok(slots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn machine(n: usize, cols: usize) -> WindingSpec {
        WindingSpec {
            n_turns: n,
            wire_diameter: 1.0,
            window_columns: cols,
            max_layers: 16,
            pattern: Pattern::Machine,
            scatter_traverse_sigma: 0.0,
            seed: 0,
        }
    }

    fn assert_positions(layout: &WindingLayout, expected: &[[f64; 2]]) {
        assert_eq!(layout.positions.len(), expected.len());
        for (got, want) in layout.positions.iter().zip(expected) {
            assert!(
                (got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12,
                "{got:?} vs {want:?}"
            );
        }
    }

    #[test]
    fn machine_single_layer() {
        let layout = generate_layout(&machine(3, 3)).unwrap();
        assert_positions(&layout, &[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
    }

    #[test]
    fn machine_second_layer_runs_back() {
        let h = 3f64.sqrt() / 2.0;
        let layout = generate_layout(&machine(5, 3)).unwrap();
        assert_positions(&layout, &[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.5, h], [0.5, h]]);
        layout.check_packing().unwrap();
    }

    #[test]
    fn machine_ignores_seed() {
        let a = generate_layout(&machine(40, 6)).unwrap();
        let mut spec = machine(40, 6);
        spec.seed = 99;
        let b = generate_layout(&spec).unwrap();
        assert_eq!(a.positions, b.positions);
    }

    #[test]
    fn too_few_turns_rejected() {
        assert!(matches!(machine(2, 3).validate(), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn capacity_counts_short_odd_layers() {
        let mut spec = machine(10, 4);
        spec.max_layers = 3;
        assert_eq!(spec.capacity(), 11);
        spec.n_turns = 12;
        // 12 <= 3 * 4 but the nested odd layer only has 3 slots
        assert!(matches!(
            spec.validate(),
            Err(Error::CapacityExceeded { capacity: 11, .. })
        ));
        spec.n_turns = 13;
        assert!(matches!(generate_layout(&spec), Err(Error::CapacityExceeded { .. })));
    }

    #[test]
    fn scatter_with_zero_sigma_fills_in_order() {
        let mut spec = machine(12, 4);
        spec.pattern = Pattern::Scatter;
        let layout = generate_layout(&spec).unwrap();
        let h = 3f64.sqrt() / 2.0;
        assert_positions(
            &layout,
            &[
                [0.0, 0.0],
                [1.0, 0.0],
                [2.0, 0.0],
                [3.0, 0.0],
                [0.5, h],
                [1.5, h],
                [2.5, h],
                [3.0, 2.0 * h],
                [0.0, 2.0 * h],
                [1.0, 2.0 * h],
                [2.0, 2.0 * h],
                [2.5, 3.0 * h],
            ],
        );
    }

    #[test]
    fn scatter_deterministic_and_seed_sensitive() {
        let mut spec = machine(64, 8);
        spec.pattern = Pattern::Scatter;
        spec.scatter_traverse_sigma = 1.5;
        spec.seed = 11;
        let a = generate_layout(&spec).unwrap();
        let b = generate_layout(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        spec.seed = 12;
        let c = generate_layout(&spec).unwrap();
        assert_ne!(a.positions, c.positions);
    }

    #[test]
    fn turn_length_grows_with_layer() {
        let layout = generate_layout(&machine(20, 5)).unwrap();
        for w in layout
            .positions
            .iter()
            .zip(&layout.turn_length)
            .collect::<Vec<_>>()
            .windows(2)
        {
            let ((p0, l0), (p1, l1)) = (w[0], w[1]);
            if p1[1] > p0[1] {
                assert!(l1 > l0);
            }
        }
        assert_eq!(layout.turn_length[0], CORE_PERIMETER_MM);
    }

    #[test]
    fn hash_sensitive_to_order() {
        let layout = generate_layout(&machine(5, 3)).unwrap();
        let mut swapped = layout.clone();
        swapped.positions.swap(0, 1);
        assert_ne!(layout.hash(), swapped.hash());
    }

    #[test]
    fn from_parts_rejects_overlap() {
        let layout = generate_layout(&machine(5, 3)).unwrap();
        let mut positions = layout.positions.clone();
        positions[1] = [0.5, 0.0];
        let err = WindingLayout::from_parts(layout.spec.clone(), positions, layout.turn_length.clone());
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }
}
