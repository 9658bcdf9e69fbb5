//! Rectangular linear assignment with forbidden pairs.
//!
//! The solver first maximizes the number of matched pairs, then minimizes
//! total cost, then picks the lexicographically smallest row-major pair list
//! among the remaining optima.
//!
//! Internally the `R x C` problem is embedded in a square `(R + C)` problem:
//! every row gets a private "unmatched" column and every column a private
//! "unmatched" row. Entries carry a lexicographic cost `(count, cost)` where
//! a real match contributes `(-1, c)`, so the shortest-augmenting-path
//! Hungarian method optimizes cardinality before cost without any big-M
//! scaling of the floating-point costs. Ties are then resolved on the
//! equality subgraph of the optimal dual potentials.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};
use std::ops::{Add, Sub};

use crate::scoring::ScoreMatrix;

/// Matched `(row, col)` pairs plus the leftovers on each side.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssignmentResult {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
    pub total_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Lex {
    count: i64,
    cost: f64,
}

impl Lex {
    const ZERO: Lex = Lex { count: 0, cost: 0.0 };
    const INF: Lex = Lex {
        count: i64::MAX / 4,
        cost: 0.0,
    };

    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| self.cost.total_cmp(&other.cost))
    }

    fn lt(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Less
    }
}

impl Add for Lex {
    type Output = Lex;
    fn add(self, o: Lex) -> Lex {
        Lex {
            count: self.count + o.count,
            cost: self.cost + o.cost,
        }
    }
}

impl Sub for Lex {
    type Output = Lex;
    fn sub(self, o: Lex) -> Lex {
        Lex {
            count: self.count - o.count,
            cost: self.cost - o.cost,
        }
    }
}

struct Embedded<'a> {
    rows: usize,
    cols: usize,
    cost: &'a [f64],
    allowed: Vec<bool>,
    blocked: Lex,
}

impl Embedded<'_> {
    fn n(&self) -> usize {
        self.rows + self.cols
    }

    fn entry(&self, i: usize, j: usize) -> Lex {
        let (r, c) = (self.rows, self.cols);
        match (i < r, j < c) {
            (true, true) => {
                if self.allowed[i * c + j] {
                    Lex {
                        count: -1,
                        cost: self.cost[i * c + j],
                    }
                } else {
                    self.blocked
                }
            }
            (true, false) => {
                if j - c == i {
                    Lex::ZERO
                } else {
                    self.blocked
                }
            }
            (false, true) => {
                if i - r == j {
                    Lex::ZERO
                } else {
                    self.blocked
                }
            }
            (false, false) => Lex::ZERO,
        }
    }
}

/// Solves the assignment over `cost`, never using pairs in `forbidden` or
/// pairs whose cost is not finite.
pub fn solve(cost: &ScoreMatrix, forbidden: &BTreeSet<(usize, usize)>) -> AssignmentResult {
    solve_with(cost, |i, j| forbidden.contains(&(i, j)))
}

/// Like [`solve`] with the forbidden set given as a predicate.
pub fn solve_with(cost: &ScoreMatrix, forbidden: impl Fn(usize, usize) -> bool) -> AssignmentResult {
    let (rows, cols) = (cost.rows(), cost.cols());
    if rows == 0 || cols == 0 {
        return AssignmentResult {
            pairs: Vec::new(),
            unmatched_rows: (0..rows).collect(),
            unmatched_cols: (0..cols).collect(),
            total_cost: 0.0,
        };
    }
    let values = cost.values();
    let mut allowed = vec![false; rows * cols];
    let mut scale = 0.0f64;
    for i in 0..rows {
        for j in 0..cols {
            let v = values[i * cols + j];
            if v.is_finite() && !forbidden(i, j) {
                allowed[i * cols + j] = true;
                scale = scale.max(v.abs());
            }
        }
    }
    let problem = Embedded {
        rows,
        cols,
        cost: values,
        allowed,
        blocked: Lex {
            count: (rows + cols) as i64 + 1,
            cost: 0.0,
        },
    };

    let (mut row_to_col, u, v) = hungarian(&problem);
    let tol = 1e-9 * (1.0 + scale) * (rows + cols) as f64;
    lexicographic_refine(&problem, &mut row_to_col, &u, &v, tol);

    let mut pairs = Vec::new();
    let mut col_used = vec![false; cols];
    let mut unmatched_rows = Vec::new();
    let mut total_cost = 0.0;
    for (i, &j) in row_to_col.iter().take(rows).enumerate() {
        if j < cols {
            pairs.push((i, j));
            col_used[j] = true;
            total_cost += values[i * cols + j];
        } else {
            unmatched_rows.push(i);
        }
    }
    let unmatched_cols = (0..cols).filter(|&j| !col_used[j]).collect();
    AssignmentResult {
        pairs,
        unmatched_rows,
        unmatched_cols,
        total_cost,
    }
}

/// Shortest augmenting path Hungarian method over lexicographic costs.
/// Returns the row-to-column matching and the row/column potentials.
fn hungarian(p: &Embedded) -> (Vec<usize>, Vec<Lex>, Vec<Lex>) {
    let n = p.n();
    // 1-based with a virtual column 0, as in the classic formulation.
    let mut u = vec![Lex::ZERO; n + 1];
    let mut v = vec![Lex::ZERO; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        col_owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![Lex::INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = Lex::INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = p.entry(i0 - 1, j - 1) - u[i0] - v[j];
                if cur.lt(&minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j].lt(&delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] = u[col_owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if col_owner[j] > 0 {
            row_to_col[col_owner[j] - 1] = j - 1;
        }
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Walks real rows in order and moves each to the smallest column that still
/// admits an optimal completion, rerouting the rest of the matching along
/// alternating paths in the equality subgraph.
fn lexicographic_refine(p: &Embedded, row_to_col: &mut [usize], u: &[Lex], v: &[Lex], tol: f64) {
    let n = p.n();
    let tight = |i: usize, j: usize| {
        let red = p.entry(i, j) - u[i] - v[j];
        red.count == 0 && red.cost.abs() <= tol
    };
    let mut col_to_row = vec![0usize; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    let mut fixed = vec![false; n];

    for r in 0..p.rows {
        let current = row_to_col[r];
        for c in 0..current {
            if !tight(r, c) {
                continue;
            }
            let displaced = col_to_row[c];
            if fixed[displaced] {
                continue;
            }
            if let Some(path) = reroute(n, displaced, current, c, r, &fixed, &tight, &col_to_row) {
                // path: (row, new column) assignments for displaced rows
                for (row, col) in path {
                    row_to_col[row] = col;
                    col_to_row[col] = row;
                }
                row_to_col[r] = c;
                col_to_row[c] = r;
                break;
            }
        }
        fixed[r] = true;
    }
}

/// Breadth-first search for an alternating path that rehomes `start` and
/// ends on column `target`, avoiding fixed rows, the moving row and the
/// column it is moving into. Returns the new `(row, col)` assignments.
#[allow(clippy::too_many_arguments)]
fn reroute(
    n: usize,
    start: usize,
    target: usize,
    taken: usize,
    mover: usize,
    fixed: &[bool],
    tight: &impl Fn(usize, usize) -> bool,
    col_to_row: &[usize],
) -> Option<Vec<(usize, usize)>> {
    let mut parent_row = vec![usize::MAX; n]; // column -> row that reached it
    let mut seen_row = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen_row[start] = true;
    seen_row[mover] = true;
    while let Some(row) = queue.pop_front() {
        for col in 0..n {
            if col == taken || parent_row[col] != usize::MAX || !tight(row, col) {
                continue;
            }
            parent_row[col] = row;
            if col == target {
                let mut out = Vec::new();
                let mut c = col;
                loop {
                    let r = parent_row[c];
                    out.push((r, c));
                    if r == start {
                        return Some(out);
                    }
                    // r gives up its current column to whoever reached it
                    c = (0..n).find(|&cc| col_to_row[cc] == r).expect("row is matched");
                }
            }
            let next = col_to_row[col];
            if !seen_row[next] && !fixed[next] {
                seen_row[next] = true;
                queue.push_back(next);
            }
        }
    }
    None
}
