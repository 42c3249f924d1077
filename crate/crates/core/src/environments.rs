//! Benchmark domains: the slippery gridworld with three cost variants, the
//! cliff-walking task, and small random MDPs for tests and benchmarks.
//!
//! Maps are plain text, one row per line: `#` wall, `.` free, `G` goal,
//! `S` start, `C` cliff. Trailing whitespace is ignored.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::mdp::{CostModel, TabularMdp};

/// The shipped 8x8 gridworld.
pub const DEFAULT_GRIDWORLD_MAP: &str = include_str!("../maps/gridworld8.txt");
/// The shipped 12x4 cliff.
pub const DEFAULT_CLIFF_MAP: &str = include_str!("../maps/cliff12x4.txt");

/// Slide probability to each orthogonally adjacent available square.
pub const SLIDE_ORTHOGONAL: f64 = 0.15;
/// Slide probability to each diagonally adjacent available square.
pub const SLIDE_DIAGONAL: f64 = 0.05;

pub const CLIFF_STEP_COST: f64 = 1.0;
pub const CLIFF_FALL_COST: f64 = 5.0;
pub const CLIFF_GOAL_COST: f64 = 0.0;

/// Gridworld moves as `(d_row, d_col)`, row-major over the 3x3 block; index 4
/// is "stay".
pub const GRID_MOVES: [(i64, i64); 9] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 0),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Cliff moves: up, down, left, right.
pub const CLIFF_MOVES: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Free,
    Wall,
    Goal,
    Start,
    Cliff,
}

impl Cell {
    fn from_char(c: char) -> Option<Self> {
        match c {
            '.' => Some(Cell::Free),
            '#' => Some(Cell::Wall),
            'G' => Some(Cell::Goal),
            'S' => Some(Cell::Start),
            'C' => Some(Cell::Cliff),
            _ => None,
        }
    }

    fn to_char(self) -> char {
        match self {
            Cell::Free => '.',
            Cell::Wall => '#',
            Cell::Goal => 'G',
            Cell::Start => 'S',
            Cell::Cliff => 'C',
        }
    }
}

/// A validated rectangular map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
}

impl GridMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.width + col]
    }

    fn find(&self, wanted: Cell) -> Vec<(usize, usize)> {
        (0..self.height)
            .flat_map(|r| (0..self.width).map(move |c| (r, c)))
            .filter(|&(r, c)| self.cell(r, c) == wanted)
            .collect()
    }

    pub fn goal(&self) -> (usize, usize) {
        self.find(Cell::Goal)[0]
    }

    pub fn start(&self) -> Option<(usize, usize)> {
        self.find(Cell::Start).first().copied()
    }

    pub fn has_cliff(&self) -> bool {
        self.cells.contains(&Cell::Cliff)
    }

    /// Neighbor of `(row, col)` at `delta`, if it is on the board and not a
    /// wall.
    fn available(&self, row: usize, col: usize, delta: (i64, i64)) -> Option<(usize, usize)> {
        let r = row as i64 + delta.0;
        let c = col as i64 + delta.1;
        if r < 0 || c < 0 || r >= self.height as i64 || c >= self.width as i64 {
            return None;
        }
        let (r, c) = (r as usize, c as usize);
        (self.cell(r, c) != Cell::Wall).then_some((r, c))
    }
}

impl std::fmt::Display for GridMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in 0..self.height {
            let line: String = (0..self.width).map(|c| self.cell(r, c).to_char()).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::MapParse {
        line,
        column,
        message: message.into(),
    }
}

/// Parses and validates a text map. Line and column numbers in errors are
/// 1-based.
pub fn parse_map(text: &str) -> Result<GridMap> {
    let lines: Vec<&str> = text.lines().map(str::trim_end).collect();
    let used = lines
        .iter()
        .rposition(|l| !l.is_empty())
        .map_or(0, |i| i + 1);
    let lines = &lines[..used];
    if lines.is_empty() {
        return Err(parse_error(1, 1, "empty map"));
    }
    let width = lines[0].chars().count();
    let mut cells = Vec::with_capacity(width * lines.len());
    let mut goal_seen = false;
    let mut start_seen = false;
    for (i, line) in lines.iter().enumerate() {
        let len = line.chars().count();
        if len != width {
            return Err(parse_error(
                i + 1,
                len.min(width) + 1,
                format!("row has {len} cells, expected {width}"),
            ));
        }
        for (j, ch) in line.chars().enumerate() {
            let cell = Cell::from_char(ch)
                .ok_or_else(|| parse_error(i + 1, j + 1, format!("unknown symbol {ch:?}")))?;
            match cell {
                Cell::Goal if goal_seen => return Err(parse_error(i + 1, j + 1, "second goal")),
                Cell::Goal => goal_seen = true,
                Cell::Start if start_seen => return Err(parse_error(i + 1, j + 1, "second start")),
                Cell::Start => start_seen = true,
                _ => {}
            }
            cells.push(cell);
        }
    }
    if !goal_seen {
        return Err(parse_error(1, 1, "map has no goal cell"));
    }
    let map = GridMap {
        width,
        height: lines.len(),
        cells,
    };
    if map.has_cliff() && !start_seen {
        return Err(parse_error(1, 1, "cliff map has no start cell"));
    }
    if let Some((r, c)) = first_unreachable(&map) {
        return Err(parse_error(
            r + 1,
            c + 1,
            "cell is not connected to the goal",
        ));
    }
    Ok(map)
}

/// Breadth-first search from the goal over orthogonal steps between non-wall
/// cells; returns the first non-wall cell (row-major) that was not reached.
fn first_unreachable(map: &GridMap) -> Option<(usize, usize)> {
    let mut seen = vec![false; map.cells.len()];
    let goal = map.goal();
    let mut queue = VecDeque::from([goal]);
    seen[goal.0 * map.width + goal.1] = true;
    while let Some((r, c)) = queue.pop_front() {
        for delta in CLIFF_MOVES {
            if let Some((nr, nc)) = map.available(r, c, delta) {
                let idx = nr * map.width + nc;
                if !seen[idx] {
                    seen[idx] = true;
                    queue.push_back((nr, nc));
                }
            }
        }
    }
    (0..map.cells.len())
        .find(|&i| map.cells[i] != Cell::Wall && !seen[i])
        .map(|i| (i / map.width, i % map.width))
}

/// How per-step costs are generated in the gridworld.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostVariant {
    /// Every step costs exactly 1.
    FixedUnit,
    /// Every step costs `N(1, std^2)`.
    GaussianUnit { std: f64 },
    /// Each `E[c|s,a]` is drawn once from `U[mean_low, mean_high]` when the
    /// domain is built; steps then cost `N(E[c|s,a], std^2)`.
    GeneratedMeans {
        mean_low: f64,
        mean_high: f64,
        std: f64,
    },
}

impl CostVariant {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CostVariant::FixedUnit => Ok(()),
            CostVariant::GaussianUnit { std } if std >= 0.0 && std.is_finite() => Ok(()),
            CostVariant::GeneratedMeans {
                mean_low,
                mean_high,
                std,
            } if std >= 0.0 && std.is_finite() && mean_low <= mean_high => Ok(()),
            other => Err(invalid(format!("invalid cost variant {other:?}"))),
        }
    }
}

/// A grid-based MDP together with its state layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    pub mdp: TabularMdp,
    /// `(row, col)` of every state.
    pub cells: Vec<(usize, usize)>,
    /// State of the `S` cell, if the map has one.
    pub start: Option<usize>,
}

impl GridDomain {
    pub fn state_of(&self, row: usize, col: usize) -> Option<usize> {
        self.cells.iter().position(|&rc| rc == (row, col))
    }
}

/// Builds the slippery gridworld: 9 actions (8 moves and stay), blocked
/// moves stay in place, then a slide to each available neighbor of the
/// target (0.15 orthogonal, 0.05 diagonal) with the leftover mass staying at
/// the target. The goal is absorbing.
pub fn build_gridworld<R: Rng + ?Sized>(
    map: &GridMap,
    variant: CostVariant,
    gamma: f64,
    gen_rng: &mut R,
) -> Result<GridDomain> {
    variant.validate()?;
    if map.has_cliff() {
        return Err(Error::InvalidMap(
            "gridworld maps cannot contain cliff cells".into(),
        ));
    }
    let cells: Vec<(usize, usize)> = (0..map.height)
        .flat_map(|r| (0..map.width).map(move |c| (r, c)))
        .filter(|&(r, c)| map.cell(r, c) != Cell::Wall)
        .collect();
    let mut index = vec![usize::MAX; map.cells.len()];
    for (s, &(r, c)) in cells.iter().enumerate() {
        index[r * map.width + c] = s;
    }
    let n = cells.len();
    let n_actions = GRID_MOVES.len();
    let mut transition = vec![0.0; n * n_actions * n];
    let mut cost = Vec::with_capacity(n * n_actions);
    let mut terminal = vec![false; n];

    for (s, &(r, c)) in cells.iter().enumerate() {
        let is_goal = map.cell(r, c) == Cell::Goal;
        terminal[s] = is_goal;
        for (a, &delta) in GRID_MOVES.iter().enumerate() {
            let row = &mut transition[(s * n_actions + a) * n..(s * n_actions + a + 1) * n];
            if is_goal {
                row[s] = 1.0;
                cost.push(CostModel::Deterministic(0.0));
                continue;
            }
            let (tr, tc) = map.available(r, c, delta).unwrap_or((r, c));
            let mut slide_mass = 0.0;
            for slide in GRID_MOVES {
                if slide == (0, 0) {
                    continue;
                }
                if let Some((nr, nc)) = map.available(tr, tc, slide) {
                    let p = if slide.0 == 0 || slide.1 == 0 {
                        SLIDE_ORTHOGONAL
                    } else {
                        SLIDE_DIAGONAL
                    };
                    row[index[nr * map.width + nc]] += p;
                    slide_mass += p;
                }
            }
            row[index[tr * map.width + tc]] += 1.0 - slide_mass;
            cost.push(match variant {
                CostVariant::FixedUnit => CostModel::Deterministic(1.0),
                CostVariant::GaussianUnit { std } => CostModel::Gaussian { mean: 1.0, std },
                CostVariant::GeneratedMeans {
                    mean_low,
                    mean_high,
                    std,
                } => {
                    let mean = if mean_high > mean_low {
                        gen_rng.random_range(mean_low..mean_high)
                    } else {
                        mean_low
                    };
                    CostModel::Gaussian { mean, std }
                }
            });
        }
    }
    let mdp = TabularMdp::new(n, n_actions, transition, cost, gamma, terminal)?;
    let start = map.start().map(|(r, c)| index[r * map.width + c]);
    Ok(GridDomain { mdp, cells, start })
}

/// Builds the continuing cliff-walking task: 4 deterministic moves, each step
/// costs 1, stepping into a cliff cell costs 5 and stepping into the goal
/// costs 0; both return the agent to the start. Cliff and goal cells are not
/// states, so there are no terminal states.
pub fn build_cliff(map: &GridMap, gamma: f64) -> Result<GridDomain> {
    let start = map
        .start()
        .ok_or_else(|| Error::InvalidMap("cliff map needs a start cell".into()))?;
    let cells: Vec<(usize, usize)> = (0..map.height)
        .flat_map(|r| (0..map.width).map(move |c| (r, c)))
        .filter(|&(r, c)| matches!(map.cell(r, c), Cell::Free | Cell::Start))
        .collect();
    let mut index = vec![usize::MAX; map.cells.len()];
    for (s, &(r, c)) in cells.iter().enumerate() {
        index[r * map.width + c] = s;
    }
    let start_state = index[start.0 * map.width + start.1];
    let n = cells.len();
    let n_actions = CLIFF_MOVES.len();
    let mut transition = vec![0.0; n * n_actions * n];
    let mut cost = Vec::with_capacity(n * n_actions);
    for (s, &(r, c)) in cells.iter().enumerate() {
        for (a, &delta) in CLIFF_MOVES.iter().enumerate() {
            let (next, step_cost) = match map.available(r, c, delta) {
                None => (s, CLIFF_STEP_COST),
                Some((nr, nc)) => match map.cell(nr, nc) {
                    Cell::Cliff => (start_state, CLIFF_FALL_COST),
                    Cell::Goal => (start_state, CLIFF_GOAL_COST),
                    _ => (index[nr * map.width + nc], CLIFF_STEP_COST),
                },
            };
            transition[(s * n_actions + a) * n + next] = 1.0;
            cost.push(CostModel::Deterministic(step_cost));
        }
    }
    let mdp = TabularMdp::new(n, n_actions, transition, cost, gamma, vec![false; n])?;
    Ok(GridDomain {
        mdp,
        cells,
        start: Some(start_state),
    })
}

/// A random dense MDP with deterministic costs in `[0, 1)`. Transition rows
/// are normalized squared uniforms, which makes them fairly peaked.
pub fn random_mdp<R: Rng + ?Sized>(
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<TabularMdp> {
    let mut transition = Vec::with_capacity(n_states * n_actions * n_states);
    let mut cost = Vec::with_capacity(n_states * n_actions);
    for _ in 0..n_states * n_actions {
        let weights: Vec<f64> = (0..n_states)
            .map(|_| rng.random::<f64>().powi(2) + 1e-3)
            .collect();
        let total: f64 = weights.iter().sum();
        transition.extend(weights.iter().map(|w| w / total));
        cost.push(CostModel::Deterministic(rng.random::<f64>()));
    }
    TabularMdp::new(
        n_states,
        n_actions,
        transition,
        cost,
        gamma,
        vec![false; n_states],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn gridworld(text: &str, variant: CostVariant) -> GridDomain {
        let map = parse_map(text).unwrap();
        build_gridworld(&map, variant, 0.95, &mut stream(0, &[])).unwrap()
    }

    #[test]
    fn parses_small_map() {
        let map = parse_map("G.\n..").unwrap();
        assert_eq!((map.width(), map.height()), (2, 2));
        assert_eq!(map.goal(), (0, 0));
        assert_eq!(map.to_string(), "G.\n..\n");
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert!(matches!(
            parse_map("G#\n#."),
            Err(Error::MapParse {
                line: 2,
                column: 2,
                ..
            })
        ));
        assert!(matches!(
            parse_map("G..\n.."),
            Err(Error::MapParse {
                line: 2,
                column: 3,
                ..
            })
        ));
        assert!(matches!(
            parse_map("G.\n.x"),
            Err(Error::MapParse {
                line: 2,
                column: 2,
                ..
            })
        ));
        assert!(matches!(parse_map("..\n.."), Err(Error::MapParse { .. })));
        assert!(matches!(
            parse_map("G.\n.G"),
            Err(Error::MapParse {
                line: 2,
                column: 2,
                ..
            })
        ));
        assert!(matches!(parse_map(""), Err(Error::MapParse { .. })));
        assert!(matches!(parse_map("..C.G"), Err(Error::MapParse { .. })));
    }

    #[test]
    fn trailing_whitespace_and_blank_lines_are_ignored() {
        let map = parse_map("G.  \n..\n\n").unwrap();
        assert_eq!((map.width(), map.height()), (2, 2));
    }

    #[test]
    fn shipped_maps_are_valid() {
        let grid = parse_map(DEFAULT_GRIDWORLD_MAP).unwrap();
        assert_eq!((grid.width(), grid.height()), (8, 8));
        assert!(!grid.has_cliff());
        let cliff = parse_map(DEFAULT_CLIFF_MAP).unwrap();
        assert_eq!((cliff.width(), cliff.height()), (12, 4));
        assert_eq!(cliff.start(), Some((3, 0)));
        assert_eq!(cliff.goal(), (3, 11));
    }

    #[test]
    fn open_square_keeps_twenty_percent_at_target() {
        let d = gridworld("...\n...\n..G", CostVariant::FixedUnit);
        let centre = d.state_of(1, 1).unwrap();
        let stay = 4;
        let row = d.mdp.transition_row(centre, stay);
        assert!((row[centre] - 0.20).abs() < 1e-15, "{}", row[centre]);
        assert_eq!(row[d.state_of(0, 1).unwrap()], 0.15);
        assert_eq!(row[d.state_of(0, 0).unwrap()], 0.05);
        // Moving up-left from the centre targets the corner (0,0), which has
        // three available neighbors.
        let row = d.mdp.transition_row(centre, 0);
        let corner = d.state_of(0, 0).unwrap();
        assert!((row[corner] - (1.0 - 0.15 - 0.15 - 0.05)).abs() < 1e-15);
    }

    #[test]
    fn walled_in_corner_cannot_move() {
        // Built directly: the parser would reject the disconnected corner.
        let boxed = GridMap {
            width: 3,
            height: 3,
            cells: vec![
                Cell::Free,
                Cell::Wall,
                Cell::Goal,
                Cell::Wall,
                Cell::Wall,
                Cell::Free,
                Cell::Free,
                Cell::Free,
                Cell::Free,
            ],
        };
        let d = build_gridworld(&boxed, CostVariant::FixedUnit, 0.9, &mut stream(0, &[])).unwrap();
        let corner = d.state_of(0, 0).unwrap();
        // Up-left leaves the board: the move is blocked and no neighbor of
        // (0,0) is available, so the agent stays with certainty.
        assert_eq!(d.mdp.transition_row(corner, 0)[corner], 1.0);
    }

    #[test]
    fn built_domains_validate() {
        let grid = parse_map(DEFAULT_GRIDWORLD_MAP).unwrap();
        for variant in [
            CostVariant::FixedUnit,
            CostVariant::GaussianUnit { std: 2.0 },
            CostVariant::GeneratedMeans {
                mean_low: 1.0,
                mean_high: 3.0,
                std: 4.0,
            },
        ] {
            let d = build_gridworld(&grid, variant, 0.95, &mut stream(5, &[])).unwrap();
            let report = d.mdp.validate();
            assert!(report.is_ok(), "{report}");
            assert_eq!(d.mdp.n_actions(), 9);
            assert_eq!(d.mdp.non_terminal_states().len(), d.mdp.n_states() - 1);
        }
        let cliff = build_cliff(&parse_map(DEFAULT_CLIFF_MAP).unwrap(), 0.95).unwrap();
        assert!(cliff.mdp.validate().is_ok());
        assert!(cliff.mdp.terminal_mask().iter().all(|t| !t));
        assert_eq!(cliff.mdp.n_states(), 12 * 4 - 11);
    }

    #[test]
    fn fixed_unit_costs() {
        let d = gridworld(DEFAULT_GRIDWORLD_MAP, CostVariant::FixedUnit);
        for s in d.mdp.non_terminal_states() {
            for a in 0..9 {
                assert_eq!(d.mdp.expected_cost(s, a).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn generated_means_are_seed_deterministic() {
        let map = parse_map(DEFAULT_GRIDWORLD_MAP).unwrap();
        let variant = CostVariant::GeneratedMeans {
            mean_low: 1.0,
            mean_high: 3.0,
            std: 4.0,
        };
        let a = build_gridworld(&map, variant, 0.95, &mut stream(9, &[])).unwrap();
        let b = build_gridworld(&map, variant, 0.95, &mut stream(9, &[])).unwrap();
        let c = build_gridworld(&map, variant, 0.95, &mut stream(10, &[])).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for s in a.mdp.non_terminal_states() {
            for act in 0..9 {
                let m = a.mdp.expected_cost(s, act).unwrap();
                assert!((1.0..3.0).contains(&m));
            }
        }
    }

    #[test]
    fn cliff_dynamics() {
        let d = build_cliff(&parse_map(DEFAULT_CLIFF_MAP).unwrap(), 0.95).unwrap();
        let m = &d.mdp;
        let start = d.start.unwrap();
        assert_eq!(d.cells[start], (3, 0));
        let (up, down, right) = (0, 1, 3);
        let mut rng = stream(1, &[]);

        let mid = d.state_of(1, 5).unwrap();
        assert_eq!(
            m.sample_transition(&mut rng, mid, right).unwrap(),
            (1.0, d.state_of(1, 6).unwrap())
        );
        let edge = d.state_of(2, 5).unwrap();
        assert_eq!(
            m.sample_transition(&mut rng, edge, down).unwrap(),
            (5.0, start)
        );
        assert_eq!(
            m.sample_transition(&mut rng, start, right).unwrap(),
            (5.0, start)
        );
        let before_goal = d.state_of(2, 11).unwrap();
        assert_eq!(
            m.sample_transition(&mut rng, before_goal, down).unwrap(),
            (0.0, start)
        );
        let top = d.state_of(0, 0).unwrap();
        assert_eq!(m.sample_transition(&mut rng, top, up).unwrap(), (1.0, top));
    }

    #[test]
    fn cliff_requires_start() {
        let map = parse_map("...\n..G").unwrap();
        assert!(matches!(build_cliff(&map, 0.9), Err(Error::InvalidMap(_))));
        assert!(build_gridworld(
            &parse_map("S.C\n..G").unwrap(),
            CostVariant::FixedUnit,
            0.9,
            &mut stream(0, &[])
        )
        .is_err());
    }

    #[test]
    fn random_mdps_validate() {
        let mut rng = stream(2, &[]);
        for _ in 0..20 {
            let m = random_mdp(6, 3, 0.9, &mut rng).unwrap();
            assert!(m.validate().is_ok());
        }
    }
}
