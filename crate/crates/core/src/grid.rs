//! Discrete integer lattice environment.
//!
//! Agent positions live in the population's `pos_0..pos_{d-1}` Int64 columns;
//! the environment keeps an occupancy map consistent with those columns.
//! Cells may hold any number of agents.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Result, SimError};
use crate::population::Population;
use crate::value::{AgentId, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighborhood {
    /// Chebyshev metric: all cells within distance r, diagonals included.
    Moore,
    /// Manhattan metric: orthogonal neighbors only at r = 1.
    VonNeumann,
}

pub type Cell = Vec<i64>;
pub type Occupancy = BTreeMap<Cell, BTreeSet<AgentId>>;

#[derive(Debug, Clone)]
pub struct GridEnv {
    dims: Vec<i64>,
    torus: bool,
    neighborhood: Neighborhood,
    occupancy: Occupancy,
    cell_of: HashMap<AgentId, Cell>,
}

impl GridEnv {
    /// Lattice with positive per-dimension extents. `torus` wraps
    /// coordinates periodically; otherwise out-of-bounds cells are errors.
    pub fn new(dims: &[i64], torus: bool, neighborhood: Neighborhood) -> Result<Self> {
        if dims.is_empty() {
            return Err(SimError::InvalidArgument("grid needs at least 1 dimension".into()));
        }
        if dims.iter().any(|&d| d <= 0) {
            return Err(SimError::InvalidArgument("grid extents must be positive".into()));
        }
        Ok(GridEnv {
            dims: dims.to_vec(),
            torus,
            neighborhood,
            occupancy: BTreeMap::new(),
            cell_of: HashMap::new(),
        })
    }

    pub fn dims(&self) -> &[i64] {
        &self.dims
    }

    pub fn torus(&self) -> bool {
        self.torus
    }

    pub fn neighborhood(&self) -> Neighborhood {
        self.neighborhood
    }

    /// Wrap (torus) or bounds-check a cell into canonical coordinates.
    pub fn canonical(&self, cell: &[i64]) -> Result<Cell> {
        if cell.len() != self.dims.len() {
            return Err(SimError::DimensionMismatch {
                expected: self.dims.len(),
                got: cell.len(),
            });
        }
        if self.torus {
            Ok(cell
                .iter()
                .zip(&self.dims)
                .map(|(&c, &d)| c.rem_euclid(d))
                .collect())
        } else {
            for (&c, &d) in cell.iter().zip(&self.dims) {
                if c < 0 || c >= d {
                    return Err(SimError::OutOfBounds(format!("cell {cell:?}")));
                }
            }
            Ok(cell.to_vec())
        }
    }

    /// Cells within `radius` of `cell` under the configured neighborhood
    /// metric, excluding the cell itself. Torus mode wraps; bounded mode
    /// clips at the edges. Sorted lexicographically, duplicate-free.
    pub fn neighbor_cells(&self, cell: &[i64], radius: i64) -> Result<Vec<Cell>> {
        if radius < 1 {
            return Err(SimError::InvalidArgument("radius must be >= 1".into()));
        }
        let center = self.canonical(cell)?;
        let d = self.dims.len();
        let mut out: BTreeSet<Cell> = BTreeSet::new();
        let mut offset = vec![-radius; d];
        'outer: loop {
            let manhattan: i64 = offset.iter().map(|o| o.abs()).sum();
            let in_metric = match self.neighborhood {
                Neighborhood::Moore => true, // enumeration is already the Chebyshev ball
                Neighborhood::VonNeumann => manhattan <= radius,
            };
            if in_metric && offset.iter().any(|&o| o != 0) {
                let candidate: Vec<i64> = center.iter().zip(&offset).map(|(&c, &o)| c + o).collect();
                match self.canonical(&candidate) {
                    Ok(wrapped) => {
                        if wrapped != center {
                            out.insert(wrapped);
                        }
                    }
                    Err(_) => {} // clipped at a non-torus edge
                }
            }
            // odometer over [-radius, radius]^d
            for i in (0..d).rev() {
                if offset[i] < radius {
                    offset[i] += 1;
                    continue 'outer;
                }
                offset[i] = -radius;
                if i == 0 {
                    break 'outer;
                }
            }
        }
        Ok(out.into_iter().collect())
    }

    fn position_attrs(&self) -> Vec<String> {
        (0..self.dims.len()).map(|i| format!("pos_{i}")).collect()
    }

    /// Place (or relocate) a live agent at a cell, updating both the
    /// position columns and the occupancy map.
    pub fn place(&mut self, pop: &mut Population, id: AgentId, cell: &[i64]) -> Result<()> {
        pop.ensure_no_batch("grid placement")?;
        pop.row_index(id)?;
        let cell = self.canonical(cell)?;
        let attrs = self.position_attrs();
        for (attr, &coord) in attrs.iter().zip(&cell) {
            pop.set_value(id, attr, Value::Int(coord))?;
        }
        if let Some(old) = self.cell_of.remove(&id) {
            if let Some(set) = self.occupancy.get_mut(&old) {
                set.remove(&id);
                if set.is_empty() {
                    self.occupancy.remove(&old);
                }
            }
        }
        self.occupancy.entry(cell.clone()).or_default().insert(id);
        self.cell_of.insert(id, cell);
        Ok(())
    }

    /// Alias of [`GridEnv::place`]; both accept already-placed agents.
    pub fn move_to(&mut self, pop: &mut Population, id: AgentId, cell: &[i64]) -> Result<()> {
        self.place(pop, id, cell)
    }

    /// Occupants of a cell, ascending by ID.
    pub fn agents_at(&self, cell: &[i64]) -> Result<Vec<AgentId>> {
        let cell = self.canonical(cell)?;
        Ok(self
            .occupancy
            .get(&cell)
            .map(|set| set.iter().copied().collect())
            .unwrap_or_default())
    }

    /// Cell an agent was last placed at.
    pub fn cell_of(&self, id: AgentId) -> Option<&Cell> {
        self.cell_of.get(&id)
    }

    /// Forget an agent (call when removing it from the population).
    pub fn evict(&mut self, id: AgentId) {
        if let Some(cell) = self.cell_of.remove(&id) {
            if let Some(set) = self.occupancy.get_mut(&cell) {
                set.remove(&id);
                if set.is_empty() {
                    self.occupancy.remove(&cell);
                }
            }
        }
    }

    pub fn occupancy(&self) -> &Occupancy {
        &self.occupancy
    }

    /// Reconstruct the occupancy map from the position columns of every
    /// placed agent. Used to check occupancy/column consistency.
    pub fn occupancy_from_columns(&self, pop: &Population) -> Result<Occupancy> {
        let attrs = self.position_attrs();
        let mut rebuilt: Occupancy = BTreeMap::new();
        for &id in self.cell_of.keys() {
            let mut cell = Vec::with_capacity(attrs.len());
            for attr in &attrs {
                match pop.get_value(id, attr)? {
                    Value::Int(c) => cell.push(c),
                    other => {
                        return Err(SimError::TypeMismatch {
                            attr: attr.clone(),
                            expected: "Int64".into(),
                            got: other.to_string(),
                        })
                    }
                }
            }
            rebuilt.entry(cell).or_default().insert(id);
        }
        Ok(rebuilt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::value::AttributeType;

    fn grid_pop(n: usize, d: usize) -> Population {
        let names: Vec<String> = (0..d).map(|i| format!("pos_{i}")).collect();
        let schema: Vec<(&str, AttributeType)> =
            names.iter().map(|n| (n.as_str(), AttributeType::Int64)).collect();
        let mut pop = Population::new(&schema).unwrap();
        pop.add_agents(n, &[]).unwrap();
        pop
    }

    #[test]
    fn moore_interior_counts() {
        for d in 1..=3usize {
            let env = GridEnv::new(&vec![9; d], false, Neighborhood::Moore).unwrap();
            let center = vec![4i64; d];
            let cells = env.neighbor_cells(&center, 1).unwrap();
            assert_eq!(cells.len(), 3usize.pow(d as u32) - 1, "d={d}");
        }
    }

    #[test]
    fn von_neumann_interior_counts() {
        for d in 1..=3usize {
            let env = GridEnv::new(&vec![9; d], false, Neighborhood::VonNeumann).unwrap();
            let center = vec![4i64; d];
            let cells = env.neighbor_cells(&center, 1).unwrap();
            assert_eq!(cells.len(), 2 * d, "d={d}");
        }
    }

    #[test]
    fn torus_wraps_corner() {
        let env = GridEnv::new(&[5, 5], true, Neighborhood::Moore).unwrap();
        let cells = env.neighbor_cells(&[0, 0], 1).unwrap();
        assert_eq!(cells.len(), 8);
        assert!(cells.contains(&vec![4, 4]));
    }

    #[test]
    fn bounded_clips_at_edge() {
        let env = GridEnv::new(&[5, 5], false, Neighborhood::Moore).unwrap();
        let cells = env.neighbor_cells(&[0, 0], 1).unwrap();
        assert_eq!(cells, vec![vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn neighbor_cells_sorted_and_unique() {
        let env = GridEnv::new(&[4, 4], true, Neighborhood::Moore).unwrap();
        let cells = env.neighbor_cells(&[1, 1], 2).unwrap();
        let mut sorted = cells.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(cells, sorted);
        // radius 2 on a 4-wide torus wraps onto the whole lattice minus the center
        assert_eq!(cells.len(), 15);
    }

    #[test]
    fn out_of_bounds_center_errors() {
        let env = GridEnv::new(&[5, 5], false, Neighborhood::Moore).unwrap();
        assert!(matches!(
            env.neighbor_cells(&[5, 0], 1),
            Err(SimError::OutOfBounds(_))
        ));
    }

    #[test]
    fn place_and_query_roundtrip() {
        let mut pop = grid_pop(2, 2);
        let mut env = GridEnv::new(&[5, 5], false, Neighborhood::Moore).unwrap();
        env.place(&mut pop, AgentId(0), &[2, 3]).unwrap();
        assert_eq!(env.agents_at(&[2, 3]).unwrap(), vec![AgentId(0)]);
        assert_eq!(pop.get_value(AgentId(0), "pos_0").unwrap(), Value::Int(2));
        assert_eq!(pop.get_value(AgentId(0), "pos_1").unwrap(), Value::Int(3));
        // multi-occupancy
        env.place(&mut pop, AgentId(1), &[2, 3]).unwrap();
        assert_eq!(env.agents_at(&[2, 3]).unwrap(), vec![AgentId(0), AgentId(1)]);
    }

    #[test]
    fn torus_move_wraps_storage() {
        let mut pop = grid_pop(1, 2);
        let mut env = GridEnv::new(&[5, 5], true, Neighborhood::Moore).unwrap();
        env.move_to(&mut pop, AgentId(0), &[6, -1]).unwrap();
        assert_eq!(pop.get_value(AgentId(0), "pos_0").unwrap(), Value::Int(1));
        assert_eq!(pop.get_value(AgentId(0), "pos_1").unwrap(), Value::Int(4));
        assert_eq!(env.agents_at(&[1, 4]).unwrap(), vec![AgentId(0)]);
    }

    #[test]
    fn non_torus_rejects_out_of_bounds_placement() {
        let mut pop = grid_pop(1, 2);
        let mut env = GridEnv::new(&[5, 5], false, Neighborhood::Moore).unwrap();
        assert!(env.place(&mut pop, AgentId(0), &[6, 0]).is_err());
    }

    #[test]
    fn occupancy_matches_columns_after_random_moves() {
        let mut pop = grid_pop(20, 2);
        let mut env = GridEnv::new(&[8, 8], true, Neighborhood::Moore).unwrap();
        let mut rng = Rng::new(11);
        for _ in 0..500 {
            let id = AgentId(rng.below(20));
            let cell = [rng.below(16) as i64 - 4, rng.below(16) as i64 - 4];
            env.move_to(&mut pop, id, &cell).unwrap();
        }
        assert_eq!(env.occupancy_from_columns(&pop).unwrap(), *env.occupancy());
    }
}
