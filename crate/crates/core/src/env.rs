//! Desk-scale environments with controllable risk structure.
//!
//! Dynamics are deterministic; all risk enters through rewards. The guarded
//! maze has a single stochastic-reward cell on the short path to the goal,
//! so the safe detour has exactly zero return variance. The noisy-region
//! grids add zero-mean Gaussian reward noise to every step taken at an
//! x-coordinate inside a configured region, optionally with a noise scale
//! that decays linearly in x.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::CategoricalDist;
use crate::rng::Rng;

/// Per-step observation flags reported alongside the reward.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepInfo {
    pub visited_red: bool,
    pub in_noisy_region: bool,
    pub x_position: f64,
}

/// Result of one environment step.
#[derive(Clone, Copy, Debug)]
pub struct StepResult {
    pub next_state: usize,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Aggregates an episode for judging and metrics.
#[derive(Clone, Copy, Debug, Default)]
pub struct EpisodeStats {
    pub steps: usize,
    pub visited_red: bool,
    pub noisy_steps: usize,
    /// Sum over steps of the effective noise standard deviation at the
    /// visited position (zero outside the region).
    pub noise_exposure: f64,
    /// Terminal state index, if the episode ended by reaching one.
    pub reached_terminal: Option<usize>,
    pub final_x: f64,
}

impl EpisodeStats {
    pub fn record(&mut self, r: &StepResult, noise_std: f64) {
        self.steps += 1;
        self.visited_red |= r.info.visited_red;
        if r.info.in_noisy_region {
            self.noisy_steps += 1;
        }
        self.noise_exposure += noise_std;
        self.final_x = r.info.x_position;
    }
}

/// Common surface of the tabular environments.
pub trait Environment {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn max_steps(&self) -> usize;
    /// Starts a new episode and returns the initial state.
    fn reset(&mut self) -> usize;
    fn step(&mut self, action: usize, rng: &mut Rng) -> Result<StepResult>;
    /// Noise standard deviation applied at x (zero for noiseless cells).
    fn noise_std_at(&self, x: f64) -> f64;
    /// Terminal state the running episode ended in, if it ended by reaching
    /// one rather than by exhausting the step budget.
    fn terminal_state_reached(&self) -> Option<usize>;
    /// Whether a finished episode followed the optimal risk-averse behavior.
    fn optimal_risk_episode(&self, stats: &EpisodeStats) -> bool;
}

/// Reward distribution of the maze's red cell: mean -1, high spread.
pub fn guarded_maze_red_dist() -> CategoricalDist {
    CategoricalDist::new(vec![(-15.0, 0.4), (-1.0, 0.2), (13.0, 0.4)])
        .expect("constant atoms are valid")
}

fn default_walls() -> Vec<(usize, usize)> {
    let mut walls = Vec::new();
    for x in 1..=4 {
        for y in 1..=2 {
            walls.push((x, y));
        }
    }
    walls
}

/// Guarded-maze layout and rewards.
///
/// The canonical 6x6 layout walls off columns 1..=4 at rows 1..=2, leaving a
/// risky bottom corridor through the red cell (5 moves start to goal) and a
/// safe perimeter path over the wall block (11 moves, 10 unit penalties, then
/// the discounted goal reward).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct GuardedMazeConfig {
    pub width: usize,
    pub height: usize,
    pub start: (usize, usize),
    pub goal: (usize, usize),
    pub red: (usize, usize),
    pub walls: Vec<(usize, usize)>,
    pub step_reward: f64,
    pub goal_reward: f64,
    pub max_steps: usize,
    pub gamma: f64,
}

impl Default for GuardedMazeConfig {
    fn default() -> Self {
        Self {
            width: 6,
            height: 6,
            start: (0, 0),
            goal: (5, 0),
            red: (2, 0),
            walls: default_walls(),
            step_reward: -1.0,
            goal_reward: 20.0,
            max_steps: 100,
            gamma: 0.999,
        }
    }
}

impl GuardedMazeConfig {
    pub fn with_goal_reward(goal_reward: f64) -> Self {
        Self { goal_reward, ..Self::default() }
    }

    fn index(&self, (x, y): (usize, usize)) -> usize {
        y * self.width + x
    }

    pub fn validate(&self) -> Result<()> {
        let in_bounds = |(x, y): (usize, usize)| x < self.width && y < self.height;
        for (name, cell) in [("start", self.start), ("goal", self.goal), ("red", self.red)] {
            if !in_bounds(cell) {
                return Err(Error::InvalidConfig(format!("{name} out of bounds")));
            }
            if self.walls.contains(&cell) {
                return Err(Error::InvalidConfig(format!("{name} is a wall")));
            }
        }
        if self.start == self.goal {
            return Err(Error::InvalidConfig("start equals goal".into()));
        }
        let dist_avoiding_red = self.shortest_path(self.start, self.goal, true);
        if dist_avoiding_red.is_none() {
            return Err(Error::InvalidConfig("no safe path avoiding the red cell".into()));
        }
        let through_red = match (
            self.shortest_path(self.start, self.red, false),
            self.shortest_path(self.red, self.goal, false),
        ) {
            (Some(a), Some(b)) => a + b,
            _ => return Err(Error::InvalidConfig("red cell unreachable".into())),
        };
        let shortest = self
            .shortest_path(self.start, self.goal, false)
            .expect("goal reachable if safe path exists");
        if through_red != shortest {
            return Err(Error::InvalidConfig(
                "red cell does not lie on a shortest start-goal path".into(),
            ));
        }
        Ok(())
    }

    /// BFS distance in moves, optionally treating the red cell as blocked.
    fn shortest_path(
        &self,
        from: (usize, usize),
        to: (usize, usize),
        avoid_red: bool,
    ) -> Option<usize> {
        let mut dist = vec![usize::MAX; self.width * self.height];
        let mut queue = std::collections::VecDeque::new();
        dist[self.index(from)] = 0;
        queue.push_back(from);
        while let Some(cell) = queue.pop_front() {
            if cell == to {
                return Some(dist[self.index(cell)]);
            }
            let (x, y) = (cell.0 as isize, cell.1 as isize);
            for (dx, dy) in [(0, 1), (0, -1), (-1, 0), (1, 0)] {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx as usize >= self.width || ny as usize >= self.height {
                    continue;
                }
                let next = (nx as usize, ny as usize);
                if self.walls.contains(&next) || (avoid_red && next == self.red) {
                    continue;
                }
                let idx = self.index(next);
                if dist[idx] == usize::MAX {
                    dist[idx] = dist[self.index(cell)] + 1;
                    queue.push_back(next);
                }
            }
        }
        None
    }
}

/// Number of unit penalties collected on the canonical safe path before the
/// goal move (the path is 11 moves long).
const SAFE_PATH_PENALTY_STEPS: usize = 10;

/// Closed-form discounted return of the canonical safe path: ten unit
/// penalties, then the goal reward at t = 10.
pub fn safe_path_return(cfg: &GuardedMazeConfig) -> f64 {
    let mut total = 0.0;
    for t in 0..SAFE_PATH_PENALTY_STEPS {
        total += cfg.gamma.powi(t as i32) * cfg.step_reward;
    }
    total + cfg.gamma.powi(SAFE_PATH_PENALTY_STEPS as i32) * cfg.goal_reward
}

/// Exact return distribution of the canonical risky path: four pre-goal
/// rewards with the red draw at t = 1, then the goal at t = 4.
pub fn risky_path_return_dist(cfg: &GuardedMazeConfig) -> CategoricalDist {
    let g = cfg.gamma;
    let base = cfg.step_reward * (1.0 + g.powi(2) + g.powi(3)) + g.powi(4) * cfg.goal_reward;
    let atoms = guarded_maze_red_dist()
        .atoms()
        .iter()
        .map(|&(v, p)| (base + g * v, p))
        .collect();
    CategoricalDist::from_weighted_values(atoms).expect("valid shifted atoms")
}

/// Per-step reward statistics of the deterministic safe-path trajectory
/// under the normalized discounted occupancy, truncated at the episode end.
///
/// `return_variance` is exactly zero (every reward on the path is
/// deterministic); `reward_variance` is not, and grows with the goal reward,
/// which is the failure mode of per-step-reward-variance proxies.
#[derive(Clone, Copy, Debug)]
pub struct RewardVarianceAnalysis {
    pub mean_reward: f64,
    pub reward_variance: f64,
    pub return_variance: f64,
}

pub fn safe_path_reward_variance(cfg: &GuardedMazeConfig) -> RewardVarianceAnalysis {
    let mut rewards = vec![cfg.step_reward; SAFE_PATH_PENALTY_STEPS];
    rewards.push(cfg.goal_reward);
    let weights: Vec<f64> = (0..rewards.len()).map(|t| cfg.gamma.powi(t as i32)).collect();
    let total: f64 = weights.iter().sum();
    let mean: f64 = rewards.iter().zip(&weights).map(|(r, w)| r * w).sum::<f64>() / total;
    let second: f64 = rewards.iter().zip(&weights).map(|(r, w)| r * r * w).sum::<f64>() / total;
    RewardVarianceAnalysis {
        mean_reward: mean,
        reward_variance: second - mean * mean,
        return_variance: 0.0,
    }
}

/// The guarded maze environment. Actions: 0 up, 1 down, 2 left, 3 right.
#[derive(Clone, Debug)]
pub struct GuardedMaze {
    cfg: GuardedMazeConfig,
    red_dist: CategoricalDist,
    wall_grid: Vec<bool>,
    pos: (usize, usize),
    steps: usize,
    at_goal: bool,
}

impl GuardedMaze {
    pub fn new(cfg: GuardedMazeConfig) -> Result<Self> {
        cfg.validate()?;
        let mut wall_grid = vec![false; cfg.width * cfg.height];
        for &w in &cfg.walls {
            wall_grid[cfg.index(w)] = true;
        }
        let pos = cfg.start;
        Ok(Self { cfg, red_dist: guarded_maze_red_dist(), wall_grid, pos, steps: 0, at_goal: false })
    }

    pub fn config(&self) -> &GuardedMazeConfig {
        &self.cfg
    }

    pub fn goal_state(&self) -> usize {
        self.cfg.index(self.cfg.goal)
    }

    fn target(&self, action: usize) -> Result<(usize, usize)> {
        let (x, y) = (self.pos.0 as isize, self.pos.1 as isize);
        let (nx, ny) = match action {
            0 => (x, y + 1),
            1 => (x, y - 1),
            2 => (x - 1, y),
            3 => (x + 1, y),
            _ => return Err(Error::InvalidArgument(format!("invalid action id {action}"))),
        };
        if nx < 0 || ny < 0 || nx as usize >= self.cfg.width || ny as usize >= self.cfg.height {
            return Ok(self.pos);
        }
        let next = (nx as usize, ny as usize);
        if self.wall_grid[self.cfg.index(next)] {
            return Ok(self.pos);
        }
        Ok(next)
    }
}

impl Environment for GuardedMaze {
    fn n_states(&self) -> usize {
        self.cfg.width * self.cfg.height
    }

    fn n_actions(&self) -> usize {
        4
    }

    fn max_steps(&self) -> usize {
        self.cfg.max_steps
    }

    fn reset(&mut self) -> usize {
        self.pos = self.cfg.start;
        self.steps = 0;
        self.at_goal = false;
        self.cfg.index(self.pos)
    }

    fn step(&mut self, action: usize, rng: &mut Rng) -> Result<StepResult> {
        let next = self.target(action)?;
        self.steps += 1;
        let entered_red = next == self.cfg.red && next != self.pos;
        let reward = if next == self.cfg.goal {
            self.at_goal = true;
            self.cfg.goal_reward
        } else if entered_red {
            self.red_dist.sample(rng)
        } else {
            self.cfg.step_reward
        };
        self.pos = next;
        let done = self.at_goal || self.steps >= self.cfg.max_steps;
        Ok(StepResult {
            next_state: self.cfg.index(next),
            reward,
            done,
            info: StepInfo {
                visited_red: entered_red,
                in_noisy_region: entered_red,
                x_position: next.0 as f64,
            },
        })
    }

    fn noise_std_at(&self, _x: f64) -> f64 {
        0.0
    }

    fn terminal_state_reached(&self) -> Option<usize> {
        if self.at_goal {
            Some(self.goal_state())
        } else {
            None
        }
    }

    fn optimal_risk_episode(&self, stats: &EpisodeStats) -> bool {
        stats.reached_terminal == Some(self.goal_state())
            && !stats.visited_red
            && stats.steps <= self.cfg.max_steps
    }
}

/// A terminal cell of the noisy grid and its entry reward.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridTerminal {
    pub x: usize,
    pub y: usize,
    pub reward: f64,
}

/// Noisy-region gridworld: deterministic moves, a step reward, terminal
/// goal cells, and zero-mean Gaussian reward noise on every step whose
/// resulting x-coordinate lies in the region `x >= region_from_x`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct NoisyRegionGridConfig {
    pub width: usize,
    pub height: usize,
    pub start: (usize, usize),
    pub terminals: Vec<GridTerminal>,
    pub step_reward: f64,
    pub region_from_x: usize,
    pub noise_scale: f64,
    /// When set, the noise scale is multiplied by `max(0, 1 - x/20)`.
    pub decay: bool,
    /// Terminal whose attainment counts as the optimal risk-averse episode.
    pub risk_averse_terminal: Option<(usize, usize)>,
    pub max_steps: usize,
    pub gamma: f64,
}

impl Default for NoisyRegionGridConfig {
    fn default() -> Self {
        Self {
            width: 12,
            height: 1,
            start: (5, 0),
            terminals: vec![
                GridTerminal { x: 0, y: 0, reward: 20.0 },
                GridTerminal { x: 9, y: 0, reward: 20.0 },
            ],
            step_reward: -1.0,
            region_from_x: 6,
            noise_scale: 10.0,
            decay: false,
            risk_averse_terminal: Some((0, 0)),
            max_steps: 50,
            gamma: 0.99,
        }
    }
}

impl NoisyRegionGridConfig {
    fn index(&self, (x, y): (usize, usize)) -> usize {
        y * self.width + x
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidConfig("empty grid".into()));
        }
        if self.region_from_x >= self.width {
            return Err(Error::InvalidConfig("noisy region is empty".into()));
        }
        let in_bounds = |(x, y): (usize, usize)| x < self.width && y < self.height;
        if !in_bounds(self.start) {
            return Err(Error::InvalidConfig("start out of bounds".into()));
        }
        if self.terminals.is_empty() {
            return Err(Error::InvalidConfig("need at least one terminal".into()));
        }
        for t in &self.terminals {
            if !in_bounds((t.x, t.y)) {
                return Err(Error::InvalidConfig("terminal out of bounds".into()));
            }
            if (t.x, t.y) == self.start {
                return Err(Error::InvalidConfig("start cell is terminal".into()));
            }
        }
        if let Some(rt) = self.risk_averse_terminal {
            if !self.terminals.iter().any(|t| (t.x, t.y) == rt) {
                return Err(Error::InvalidConfig("risk_averse_terminal is not a terminal".into()));
            }
        }
        Ok(())
    }

    /// Effective noise standard deviation at column `x`.
    pub fn noise_std(&self, x: usize) -> f64 {
        if x < self.region_from_x {
            return 0.0;
        }
        let factor = if self.decay { (1.0 - x as f64 / 20.0).max(0.0) } else { 1.0 };
        self.noise_scale * factor
    }
}

#[derive(Clone, Debug)]
pub struct NoisyRegionGrid {
    cfg: NoisyRegionGridConfig,
    terminal_grid: Vec<Option<f64>>,
    pos: (usize, usize),
    steps: usize,
    done: bool,
}

impl NoisyRegionGrid {
    pub fn new(cfg: NoisyRegionGridConfig) -> Result<Self> {
        cfg.validate()?;
        let mut terminal_grid = vec![None; cfg.width * cfg.height];
        for t in &cfg.terminals {
            terminal_grid[cfg.index((t.x, t.y))] = Some(t.reward);
        }
        let pos = cfg.start;
        Ok(Self { cfg, terminal_grid, pos, steps: 0, done: false })
    }

    pub fn config(&self) -> &NoisyRegionGridConfig {
        &self.cfg
    }

    pub fn terminal_state(&self, cell: (usize, usize)) -> usize {
        self.cfg.index(cell)
    }

    fn target(&self, action: usize) -> Result<(usize, usize)> {
        let (x, y) = (self.pos.0 as isize, self.pos.1 as isize);
        // Corridors (height 1) use {0: left, 1: right}; taller grids add
        // {2: up, 3: down}.
        let (nx, ny) = if self.cfg.height == 1 {
            match action {
                0 => (x - 1, y),
                1 => (x + 1, y),
                _ => return Err(Error::InvalidArgument(format!("invalid action id {action}"))),
            }
        } else {
            match action {
                0 => (x - 1, y),
                1 => (x + 1, y),
                2 => (x, y + 1),
                3 => (x, y - 1),
                _ => return Err(Error::InvalidArgument(format!("invalid action id {action}"))),
            }
        };
        if nx < 0 || ny < 0 || nx as usize >= self.cfg.width || ny as usize >= self.cfg.height {
            return Ok(self.pos);
        }
        Ok((nx as usize, ny as usize))
    }
}

impl Environment for NoisyRegionGrid {
    fn n_states(&self) -> usize {
        self.cfg.width * self.cfg.height
    }

    fn n_actions(&self) -> usize {
        if self.cfg.height == 1 {
            2
        } else {
            4
        }
    }

    fn max_steps(&self) -> usize {
        self.cfg.max_steps
    }

    fn reset(&mut self) -> usize {
        self.pos = self.cfg.start;
        self.steps = 0;
        self.done = false;
        self.cfg.index(self.pos)
    }

    fn step(&mut self, action: usize, rng: &mut Rng) -> Result<StepResult> {
        let next = self.target(action)?;
        self.steps += 1;
        let terminal_reward = self.terminal_grid[self.cfg.index(next)];
        let mut reward = terminal_reward.unwrap_or(self.cfg.step_reward);
        let std = self.cfg.noise_std(next.0);
        let in_region = next.0 >= self.cfg.region_from_x;
        if std > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            reward += std * z;
        }
        self.pos = next;
        if terminal_reward.is_some() {
            self.done = true;
        }
        let done = self.done || self.steps >= self.cfg.max_steps;
        Ok(StepResult {
            next_state: self.cfg.index(next),
            reward,
            done,
            info: StepInfo {
                visited_red: false,
                in_noisy_region: in_region,
                x_position: next.0 as f64,
            },
        })
    }

    fn noise_std_at(&self, x: f64) -> f64 {
        self.cfg.noise_std(x as usize)
    }

    fn terminal_state_reached(&self) -> Option<usize> {
        if self.done {
            Some(self.cfg.index(self.pos))
        } else {
            None
        }
    }

    fn optimal_risk_episode(&self, stats: &EpisodeStats) -> bool {
        match self.cfg.risk_averse_terminal {
            Some(cell) => stats.reached_terminal == Some(self.cfg.index(cell)),
            None => stats.reached_terminal.is_some() && stats.noisy_steps == 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::{exact_variance, gd_pairwise, SampleSet};
    use crate::rng::{episode_rng, master_rng, Purpose};

    #[test]
    fn default_layout_validates() {
        GuardedMazeConfig::default().validate().unwrap();
    }

    #[test]
    fn wall_bump_keeps_position_with_step_reward() {
        let mut maze = GuardedMaze::new(GuardedMazeConfig::default()).unwrap();
        let start = maze.reset();
        let mut rng = master_rng(0);
        // Down from (0,0) is out of bounds.
        let r = maze.step(1, &mut rng).unwrap();
        assert_eq!(r.next_state, start);
        assert_eq!(r.reward, -1.0);
        assert!(!r.done);
        // Right from (1,0)... first move right to (1,0), then up into the wall at (1,1).
        let r = maze.step(3, &mut rng).unwrap();
        assert_eq!(r.reward, -1.0);
        let here = r.next_state;
        let r = maze.step(0, &mut rng).unwrap();
        assert_eq!(r.next_state, here, "wall at (1,1) blocks the move");
        assert_eq!(r.reward, -1.0);
    }

    #[test]
    fn entering_goal_pays_goal_reward_and_ends() {
        let cfg = GuardedMazeConfig::default();
        let mut maze = GuardedMaze::new(cfg).unwrap();
        maze.reset();
        let mut rng = master_rng(1);
        // Risky corridor: right x5.
        let mut last = None;
        for _ in 0..5 {
            last = Some(maze.step(3, &mut rng).unwrap());
        }
        let last = last.unwrap();
        assert_eq!(last.reward, 20.0);
        assert!(last.done);
        assert_eq!(last.next_state, maze.goal_state());
    }

    #[test]
    fn invalid_action_is_rejected() {
        let mut maze = GuardedMaze::new(GuardedMazeConfig::default()).unwrap();
        maze.reset();
        let mut rng = master_rng(2);
        assert!(maze.step(4, &mut rng).is_err());
    }

    #[test]
    fn red_entry_frequencies_match_distribution() {
        let mut maze = GuardedMaze::new(GuardedMazeConfig::default()).unwrap();
        let mut counts = [0usize; 3];
        let n = 100_000;
        for i in 0..n {
            let mut rng = episode_rng(5, Purpose::Rollout, 0, i as u64);
            maze.reset();
            maze.step(3, &mut rng).unwrap(); // (1,0)
            let r = maze.step(3, &mut rng).unwrap(); // into red (2,0)
            assert!(r.info.visited_red);
            match r.reward as i64 {
                -15 => counts[0] += 1,
                -1 => counts[1] += 1,
                13 => counts[2] += 1,
                other => panic!("unexpected red reward {other}"),
            }
        }
        let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        for (f, p) in freq.iter().zip([0.4, 0.2, 0.4]) {
            assert!((f - p).abs() < 0.01, "freq {f} vs prob {p}");
        }
    }

    #[test]
    fn timeout_terminates_the_episode() {
        let mut maze = GuardedMaze::new(GuardedMazeConfig::default()).unwrap();
        maze.reset();
        let mut rng = master_rng(3);
        let mut done = false;
        let mut steps = 0;
        while !done {
            // Bounce down against the boundary forever.
            let r = maze.step(1, &mut rng).unwrap();
            done = r.done;
            steps += 1;
            assert!(steps <= 100);
        }
        assert_eq!(steps, 100);
    }

    #[test]
    fn safe_path_return_closed_form() {
        let cfg = GuardedMazeConfig::default();
        let got = safe_path_return(&cfg);
        assert!((got - 9.846).abs() < 1e-2, "{got}");

        let modified = GuardedMazeConfig { goal_reward: -60.7, ..GuardedMazeConfig::default() };
        let got = safe_path_return(&modified);
        assert!((got - (-70.0)).abs() < 0.5, "{got}");
    }

    #[test]
    fn safe_path_matches_stepping_through_the_maze() {
        let cfg = GuardedMazeConfig::default();
        let mut maze = GuardedMaze::new(cfg.clone()).unwrap();
        maze.reset();
        let mut rng = master_rng(4);
        // Up x3, right x5, down x3.
        let actions = [0, 0, 0, 3, 3, 3, 3, 3, 1, 1, 1];
        let mut ret = 0.0;
        let mut done = false;
        for (t, &a) in actions.iter().enumerate() {
            let r = maze.step(a, &mut rng).unwrap();
            assert!(!r.info.visited_red);
            ret += cfg.gamma.powi(t as i32) * r.reward;
            done = r.done;
        }
        assert!(done);
        assert!((ret - safe_path_return(&cfg)).abs() < 1e-12);
    }

    #[test]
    fn risky_path_dist_matches_stepping() {
        let cfg = GuardedMazeConfig::default();
        let dist = risky_path_return_dist(&cfg);
        assert!(exact_variance(&dist) > 0.0);
        // Step the corridor with a fixed seed and check membership.
        let mut maze = GuardedMaze::new(cfg.clone()).unwrap();
        maze.reset();
        let mut rng = master_rng(6);
        let mut ret = 0.0;
        for t in 0..5 {
            let r = maze.step(3, &mut rng).unwrap();
            ret += cfg.gamma.powi(t as i32) * r.reward;
        }
        assert!(
            dist.values().any(|v| (v - ret).abs() < 1e-9),
            "sampled risky return {ret} not among {:?}",
            dist.atoms()
        );
    }

    #[test]
    fn reward_variance_critique_values() {
        let goal10 = GuardedMazeConfig { goal_reward: 10.0, ..GuardedMazeConfig::default() };
        let a10 = safe_path_reward_variance(&goal10);
        assert_eq!(a10.return_variance, 0.0);
        assert!((a10.reward_variance - 10.0).abs() < 1.0, "{}", a10.reward_variance);

        let goal20 = GuardedMazeConfig::default();
        let a20 = safe_path_reward_variance(&goal20);
        assert_eq!(a20.return_variance, 0.0);
        assert!((a20.reward_variance - 36.4).abs() < 3.64, "{}", a20.reward_variance);
    }

    #[test]
    fn same_seed_gives_identical_trajectories() {
        let run = || {
            let mut maze = GuardedMaze::new(GuardedMazeConfig::default()).unwrap();
            maze.reset();
            let mut rng = episode_rng(99, Purpose::Rollout, 7, 3);
            let mut rewards = Vec::new();
            for a in [3, 3, 2, 3, 3, 3, 3] {
                rewards.push(maze.step(a, &mut rng).unwrap().reward);
            }
            rewards
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn grid_outside_region_is_noiseless() {
        let cfg = NoisyRegionGridConfig::default();
        let mut grid = NoisyRegionGrid::new(cfg).unwrap();
        grid.reset();
        let mut rng = master_rng(8);
        let r = grid.step(0, &mut rng).unwrap(); // left, to x=4 < 6
        assert_eq!(r.reward, -1.0);
        assert!(!r.info.in_noisy_region);
    }

    #[test]
    fn grid_noise_variance_matches_scale() {
        let cfg = NoisyRegionGridConfig {
            noise_scale: 5.0,
            ..NoisyRegionGridConfig::default()
        };
        let mut grid = NoisyRegionGrid::new(cfg).unwrap();
        let n = 100_000;
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = episode_rng(13, Purpose::Rollout, 0, i as u64);
            grid.reset();
            let r = grid.step(1, &mut rng).unwrap(); // right, to x=6: in region
            assert!(r.info.in_noisy_region);
            samples.push(r.reward - (-1.0));
        }
        let set = SampleSet::sorted(samples).unwrap();
        let var = crate::risk::variance_pairwise(&set);
        assert!((var - 25.0).abs() < 0.05 * 25.0, "observed variance {var}");
        assert!(gd_pairwise(&set) > 0.0);
    }

    #[test]
    fn decay_clamps_to_zero_at_twenty() {
        let cfg = NoisyRegionGridConfig {
            width: 24,
            start: (18, 0),
            terminals: vec![GridTerminal { x: 23, y: 0, reward: 0.0 }],
            region_from_x: 1,
            decay: true,
            risk_averse_terminal: None,
            ..NoisyRegionGridConfig::default()
        };
        assert_eq!(cfg.noise_std(20), 0.0);
        assert_eq!(cfg.noise_std(22), 0.0);
        assert!((cfg.noise_std(10) - 10.0 * 0.5).abs() < 1e-12);
        let mut grid = NoisyRegionGrid::new(cfg).unwrap();
        grid.reset();
        let mut rng = master_rng(21);
        grid.step(1, &mut rng).unwrap(); // x=19
        let r = grid.step(1, &mut rng).unwrap(); // x=20: factor clamped to 0
        assert_eq!(r.reward, -1.0);
    }

    #[test]
    fn grid_terminal_entry_ends_episode_with_goal_reward_plus_noise() {
        let cfg = NoisyRegionGridConfig {
            start: (8, 0),
            ..NoisyRegionGridConfig::default()
        };
        let mut grid = NoisyRegionGrid::new(cfg).unwrap();
        grid.reset();
        let mut rng = master_rng(17);
        let r = grid.step(1, &mut rng).unwrap(); // into terminal at x=9, noisy region
        assert!(r.done);
        assert!(r.info.in_noisy_region);
        assert!((r.reward - 20.0).abs() < 50.0, "goal reward plus noise draw");
    }
}
