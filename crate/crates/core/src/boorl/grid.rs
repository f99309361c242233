//! Slippery gridworld loaded from a text map.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{invalid, Result};

pub const N_ACTIONS: usize = 4;
const MOVES: [(i64, i64); N_ACTIONS] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// Action names in index order.
pub const ACTION_NAMES: [&str; N_ACTIONS] = ["up", "down", "left", "right"];

/// Gridworld over the non-wall cells of a map. Reaching the goal pays 1 and
/// ends the episode; every other step pays 0. With probability `slip_prob`
/// the chosen action is replaced by a uniformly random one.
#[derive(Debug, Clone, PartialEq)]
pub struct Gridworld {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    start: usize,
    goal: usize,
    horizon: usize,
    slip_prob: f64,
    /// Cell index of each state.
    cells: Vec<usize>,
    /// State index of each cell, `usize::MAX` on walls.
    state_of: Vec<usize>,
    /// `next[s][a]` for a non-slipping move.
    next: Vec<[usize; N_ACTIONS]>,
}

impl Gridworld {
    /// Parses `#` wall, `.` floor, `S` start, `G` goal. Rows must have equal
    /// width; blank lines are skipped.
    pub fn parse(map: &str, horizon: usize, slip_prob: f64) -> Result<Self> {
        let rows: Vec<&str> = map.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if rows.is_empty() {
            return Err(invalid("empty map"));
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        let mut walls = Vec::with_capacity(width * height);
        let (mut start, mut goal) = (None, None);
        for (r, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(invalid(format!("map row {r} has a different width")));
            }
            for (c, ch) in row.chars().enumerate() {
                let cell = r * width + c;
                match ch {
                    '#' => walls.push(true),
                    '.' => walls.push(false),
                    'S' if start.is_none() => {
                        start = Some(cell);
                        walls.push(false);
                    }
                    'G' if goal.is_none() => {
                        goal = Some(cell);
                        walls.push(false);
                    }
                    'S' | 'G' => return Err(invalid(format!("duplicate '{ch}' in map"))),
                    other => return Err(invalid(format!("unknown map symbol {other:?}"))),
                }
            }
        }
        let start = start.ok_or_else(|| invalid("map has no start"))?;
        let goal = goal.ok_or_else(|| invalid("map has no goal"))?;
        Self::build(width, height, walls, start, goal, horizon, slip_prob)
    }

    fn build(
        width: usize,
        height: usize,
        walls: Vec<bool>,
        start_cell: usize,
        goal_cell: usize,
        horizon: usize,
        slip_prob: f64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&slip_prob) {
            return Err(invalid(format!("slip probability must lie in [0, 1), got {slip_prob}")));
        }
        if horizon == 0 {
            return Err(invalid("horizon must be positive"));
        }
        let mut state_of = vec![usize::MAX; walls.len()];
        let mut cells = Vec::new();
        for (cell, &w) in walls.iter().enumerate() {
            if !w {
                state_of[cell] = cells.len();
                cells.push(cell);
            }
        }
        let next = cells
            .iter()
            .map(|&cell| {
                let (r, c) = ((cell / width) as i64, (cell % width) as i64);
                let mut out = [state_of[cell]; N_ACTIONS];
                for (a, (dr, dc)) in MOVES.iter().enumerate() {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr >= 0 && nc >= 0 && (nr as usize) < height && (nc as usize) < width {
                        let target = nr as usize * width + nc as usize;
                        if !walls[target] {
                            out[a] = state_of[target];
                        }
                    }
                }
                out
            })
            .collect();
        let world = Self {
            width,
            height,
            walls,
            start: state_of[start_cell],
            goal: state_of[goal_cell],
            horizon,
            slip_prob,
            cells,
            state_of,
            next,
        };
        if world.distance_to_goal()[world.start].is_none() {
            return Err(invalid("goal is not reachable from start"));
        }
        Ok(world)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_states(&self) -> usize {
        self.cells.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn slip_prob(&self) -> f64 {
        self.slip_prob
    }

    pub fn is_wall(&self, row: usize, col: usize) -> bool {
        self.walls[row * self.width + col]
    }

    /// `(row, col)` of a state.
    pub fn position(&self, s: usize) -> (usize, usize) {
        (self.cells[s] / self.width, self.cells[s] % self.width)
    }

    pub fn state_at(&self, row: usize, col: usize) -> Option<usize> {
        let s = self.state_of[row * self.width + col];
        (s != usize::MAX).then_some(s)
    }

    /// Successor of a move that does not slip.
    pub fn intended(&self, s: usize, a: usize) -> usize {
        self.next[s][a]
    }

    /// Outcome distribution of action `a` at `s` as `(next_state, prob)`.
    pub fn outcomes(&self, s: usize, a: usize) -> Vec<(usize, f64)> {
        let mut probs = vec![0.0; self.n_states()];
        probs[self.next[s][a]] += 1.0 - self.slip_prob;
        for b in 0..N_ACTIONS {
            probs[self.next[s][b]] += self.slip_prob / N_ACTIONS as f64;
        }
        probs.into_iter().enumerate().filter(|&(_, p)| p > 0.0).collect()
    }

    /// Samples `(reward, next_state, done)`.
    pub fn step<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> (f64, usize, bool) {
        let a = if self.slip_prob > 0.0 && rng.random::<f64>() < self.slip_prob {
            rng.random_range(0..N_ACTIONS)
        } else {
            a
        };
        let s2 = self.next[s][a];
        if s2 == self.goal {
            (1.0, s2, true)
        } else {
            (0.0, s2, false)
        }
    }

    /// Shortest move count to the goal from every state, ignoring slips.
    pub fn distance_to_goal(&self) -> Vec<Option<usize>> {
        let n = self.n_states();
        let mut dist = vec![None; n];
        dist[self.goal] = Some(0);
        let mut queue = VecDeque::from([self.goal]);
        while let Some(t) = queue.pop_front() {
            for s in 0..n {
                if dist[s].is_none() && self.next[s].contains(&t) {
                    dist[s] = Some(dist[t].unwrap() + 1);
                    queue.push_back(s);
                }
            }
        }
        dist
    }

    /// Undiscounted `H`-step value of a stationary stochastic policy
    /// `policy[s][a]` from the start state.
    pub fn evaluate(&self, policy: &[[f64; N_ACTIONS]]) -> f64 {
        self.backward(|s, q| (0..N_ACTIONS).map(|a| policy[s][a] * q[a]).sum())[self.start]
    }

    /// Optimal `H`-step value from every state.
    pub fn optimal_values(&self) -> Vec<f64> {
        self.backward(|_, q| q.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Optimal time-dependent actions `actions[h][s]`, lowest index on ties.
    pub fn optimal_actions(&self) -> Vec<Vec<usize>> {
        let mut v = vec![0.0; self.n_states()];
        let mut actions = vec![vec![0; self.n_states()]; self.horizon];
        for h in (0..self.horizon).rev() {
            let mut v_new = vec![0.0; self.n_states()];
            for s in 0..self.n_states() {
                if s == self.goal {
                    continue;
                }
                let q = self.action_values(s, &v);
                let best = crate::stats::argmax(&q);
                actions[h][s] = best;
                v_new[s] = q[best];
            }
            v = v_new;
        }
        actions
    }

    fn action_values(&self, s: usize, v_next: &[f64]) -> [f64; N_ACTIONS] {
        let mut q = [0.0; N_ACTIONS];
        for (a, qa) in q.iter_mut().enumerate() {
            *qa = self
                .outcomes(s, a)
                .into_iter()
                .map(|(s2, p)| p * if s2 == self.goal { 1.0 } else { v_next[s2] })
                .sum();
        }
        q
    }

    fn backward(&self, combine: impl Fn(usize, &[f64; N_ACTIONS]) -> f64) -> Vec<f64> {
        let mut v = vec![0.0; self.n_states()];
        for _ in 0..self.horizon {
            let mut v_new = vec![0.0; self.n_states()];
            for s in 0..self.n_states() {
                if s != self.goal {
                    v_new[s] = combine(s, &self.action_values(s, &v));
                }
            }
            v = v_new;
        }
        v
    }
}

/// 5x5 layout used by the gridworld preset.
pub const GRIDWORLD_5X5: &str = "\
S....
.##..
...#.
.#...
...#G
";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn parses_the_preset_map() {
        let g = Gridworld::parse(GRIDWORLD_5X5, 20, 0.1).unwrap();
        assert_eq!((g.width(), g.height()), (5, 5));
        assert_eq!(g.n_states(), 25 - 5);
        assert_eq!(g.position(g.start()), (0, 0));
        assert_eq!(g.position(g.goal()), (4, 4));
        assert_eq!(g.distance_to_goal()[g.start()], Some(8));
    }

    #[test]
    fn rejects_bad_maps() {
        assert!(Gridworld::parse("S#G", 5, 0.0).is_err());
        assert!(Gridworld::parse("S.\n.", 5, 0.0).is_err());
        assert!(Gridworld::parse("S.x.G", 5, 0.0).is_err());
        assert!(Gridworld::parse("...", 5, 0.0).is_err());
        assert!(Gridworld::parse("S.G", 5, 1.0).is_err());
    }

    #[test]
    fn walls_and_edges_block() {
        let g = Gridworld::parse("S#\n.G", 3, 0.0).unwrap();
        let s = g.start();
        assert_eq!(g.intended(s, 0), s);
        assert_eq!(g.intended(s, 3), s);
        assert_eq!(g.position(g.intended(s, 1)), (1, 0));
    }

    #[test]
    fn corridor_values() {
        // Deterministic corridor S . G: two steps to the goal.
        let g = Gridworld::parse("S.G", 2, 0.0).unwrap();
        assert_eq!(g.optimal_values()[g.start()], 1.0);
        let short = Gridworld::parse("S.G", 1, 0.0).unwrap();
        assert_eq!(short.optimal_values()[short.start()], 0.0);
        let mut right = vec![[0.0; N_ACTIONS]; g.n_states()];
        right.iter_mut().for_each(|p| p[3] = 1.0);
        assert_eq!(g.evaluate(&right), 1.0);
        assert_eq!(g.optimal_actions()[0][g.start()], 3);
    }

    #[test]
    fn outcome_rows_sum_to_one_and_match_sampling() {
        let g = Gridworld::parse(GRIDWORLD_5X5, 20, 0.2).unwrap();
        for s in 0..g.n_states() {
            for a in 0..N_ACTIONS {
                let total: f64 = g.outcomes(s, a).iter().map(|x| x.1).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
        let mut rng = seeded(0);
        let n = 100_000;
        let hits = (0..n).filter(|_| g.step(g.start(), 3, &mut rng).1 == g.intended(g.start(), 3)).count();
        let p = g.outcomes(g.start(), 3).iter().find(|x| x.0 == g.intended(g.start(), 3)).unwrap().1;
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 4.0 * sd);
    }

    #[test]
    fn optimal_value_dominates_any_policy() {
        let g = Gridworld::parse(GRIDWORLD_5X5, 14, 0.1).unwrap();
        let v_star = g.optimal_values()[g.start()];
        let uniform = vec![[0.25; N_ACTIONS]; g.n_states()];
        assert!(g.evaluate(&uniform) < v_star);
        assert!(v_star > 0.5 && v_star <= 1.0);
    }
}
