//! Time-varying graph-level features for the decoder: per-step node degrees
//! and shortest-path matrices with prefix structure, packed into the
//! reduced bias tensor.

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gentoken::{GrammarError, GrammarState, Token};

/// Default shortest-path cap; `INF_CODE` marks disconnected pairs.
pub const D_MAX: u16 = 15;
/// Code for "no path" under the default cap, kept distinct from every real
/// distance and from the zero self-distance.
pub const INF_CODE: u16 = D_MAX + 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StepFeatError {
    #[error("grammar error: {0}")]
    Grammar(#[from] GrammarError),
    #[error("degree table must have {want} rows, got {got}")]
    DegreeTableRows { got: usize, want: usize },
    #[error("shortest-path table must have {want} rows, got {got}")]
    SpdTableRows { got: usize, want: usize },
    #[error("embedding tables disagree on width: {0} vs {1}")]
    TableWidthMismatch(usize, usize),
}

/// Features of the partial graph after step `i`: the first `i` nodes and
/// every edge among them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFeatureFrame {
    /// Node count of this frame (1-based step).
    pub step: usize,
    /// Heavy-atom degree per node in the step graph.
    pub degree: Vec<u32>,
    /// Row-major `step x step` shortest-path codes: 0 on the diagonal,
    /// capped at [`D_MAX`], [`INF_CODE`] for disconnected pairs.
    pub spd: Vec<Vec<u16>>,
}

/// Frames for steps `1..=n`; frame `i` restricted to earlier nodes equals
/// frame `i-1` plus the new node's edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSeries {
    pub frames: Vec<StepFeatureFrame>,
}

impl FeatureSeries {
    pub fn node_count(&self) -> usize {
        self.frames.len()
    }
}

/// Node list and per-node earlier-neighbor lists extracted from a stream.
fn growth_plan(tokens: &[Token]) -> Result<Vec<Vec<usize>>, GrammarError> {
    let mut state = GrammarState::new();
    let mut edges_per_node: Vec<Vec<usize>> = Vec::new();
    for (at, &token) in tokens.iter().enumerate() {
        state.step(at, token)?;
        match token {
            Token::Atom { .. } => edges_per_node.push(Vec::new()),
            Token::Edge { gap, .. } => {
                let current = edges_per_node.len() - 1;
                edges_per_node.last_mut().unwrap().push(current - gap);
            }
            _ => {}
        }
    }
    if !state.finished() {
        return Err(GrammarError::MissingEos);
    }
    Ok(edges_per_node)
}

const UNREACHED: u32 = u32::MAX / 2;

fn cap(d: u32, d_max: u16) -> u16 {
    if d >= UNREACHED {
        d_max + 1
    } else {
        (d as u16).min(d_max)
    }
}

/// [`build_series_incremental_capped`] at the default cap.
pub fn build_series_incremental(tokens: &[Token]) -> Result<FeatureSeries, StepFeatError> {
    build_series_incremental_capped(tokens, D_MAX)
}

/// Maintain degrees and uncapped distances while appending one node at a
/// time: the new row comes from a BFS out of the new node, then existing
/// pairs relax through it. Distances are capped at `d_max`, with
/// `d_max + 1` coding disconnection.
pub fn build_series_incremental_capped(
    tokens: &[Token],
    d_max: u16,
) -> Result<FeatureSeries, StepFeatError> {
    let plan = growth_plan(tokens)?;
    let n = plan.len();
    let mut degree: Vec<u32> = Vec::with_capacity(n);
    let mut dist: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut adj: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut frames = Vec::with_capacity(n);

    for (i, earlier) in plan.iter().enumerate() {
        adj.push(earlier.clone());
        for &j in earlier {
            adj[j].push(i);
        }
        degree.push(earlier.len() as u32);
        for &j in earlier {
            degree[j] += 1;
        }

        // BFS from the new node over the grown graph.
        let mut row = vec![UNREACHED; i + 1];
        row[i] = 0;
        let mut queue = std::collections::VecDeque::from([i]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if row[v] == UNREACHED {
                    row[v] = row[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        // Any new shortest path between old nodes passes through node i.
        for a in 0..i {
            for b in (a + 1)..i {
                let via = row[a].saturating_add(row[b]);
                if via < dist[a][b] {
                    dist[a][b] = via;
                    dist[b][a] = via;
                }
            }
        }
        for (a, d) in dist.iter_mut().enumerate() {
            d.push(row[a]);
        }
        dist.push(row);

        frames.push(StepFeatureFrame {
            step: i + 1,
            degree: degree.clone(),
            spd: dist
                .iter()
                .map(|r| r.iter().map(|&d| cap(d, d_max)).collect())
                .collect(),
        });
    }
    Ok(FeatureSeries { frames })
}

/// Independent oracle: every frame recomputed from scratch by all-pairs BFS.
pub fn build_series_bruteforce(tokens: &[Token]) -> Result<FeatureSeries, StepFeatError> {
    build_series_bruteforce_capped(tokens, D_MAX)
}

/// [`build_series_bruteforce`] with an explicit distance cap.
pub fn build_series_bruteforce_capped(
    tokens: &[Token],
    d_max: u16,
) -> Result<FeatureSeries, StepFeatError> {
    let plan = growth_plan(tokens)?;
    let n = plan.len();
    let mut frames = Vec::with_capacity(n);
    for step in 1..=n {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); step];
        for (i, earlier) in plan.iter().enumerate().take(step) {
            for &j in earlier {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        let degree: Vec<u32> = adj.iter().map(|a| a.len() as u32).collect();
        let mut spd = vec![vec![d_max + 1; step]; step];
        for (src, spd_row) in spd.iter_mut().enumerate() {
            let mut seen = vec![UNREACHED; step];
            seen[src] = 0;
            let mut queue = std::collections::VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if seen[v] == UNREACHED {
                        seen[v] = seen[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            for (dst, &d) in seen.iter().enumerate() {
                spd_row[dst] = cap(d, d_max);
            }
        }
        frames.push(StepFeatureFrame {
            step,
            degree,
            spd,
        });
    }
    Ok(FeatureSeries { frames })
}

/// Pack a series into the reduced bias tensor: for `j <= i`,
/// `D2[i][j] = degree_table[clamp(degree_j at frame i+1)] +
/// spd_table[spd(i, j) at frame i+1]`; entries above the diagonal are zero
/// (they sit under the causal mask).
///
/// For a cap of `d_max`, `degree_table` has `d_max` rows (degrees clamp
/// into `0..d_max`) and `spd_table` has `d_max + 2` rows (distances
/// `0..=d_max` plus the disconnected code); the cap is inferred from the
/// table shapes and must cover the series' codes.
pub fn pack_bias(
    series: &FeatureSeries,
    degree_table: &Array2<f64>,
    spd_table: &Array2<f64>,
) -> Result<Array3<f64>, StepFeatError> {
    if spd_table.nrows() < 3 {
        return Err(StepFeatError::SpdTableRows {
            got: spd_table.nrows(),
            want: D_MAX as usize + 2,
        });
    }
    let d_max = spd_table.nrows() - 2;
    if degree_table.nrows() != d_max {
        return Err(StepFeatError::DegreeTableRows {
            got: degree_table.nrows(),
            want: d_max,
        });
    }
    if degree_table.ncols() != spd_table.ncols() {
        return Err(StepFeatError::TableWidthMismatch(
            degree_table.ncols(),
            spd_table.ncols(),
        ));
    }
    let n = series.node_count();
    let width = degree_table.ncols();
    let mut out = Array3::<f64>::zeros((n, n, width));
    for (i, frame) in series.frames.iter().enumerate() {
        for j in 0..=i {
            let deg_row = (frame.degree[j] as usize).min(d_max - 1);
            let spd_row = frame.spd[i][j] as usize;
            if spd_row >= spd_table.nrows() {
                return Err(StepFeatError::SpdTableRows {
                    got: spd_table.nrows(),
                    want: spd_row + 1,
                });
            }
            for k in 0..width {
                out[[i, j, k]] = degree_table[[deg_row, k]] + spd_table[[spd_row, k]];
            }
        }
    }
    Ok(out)
}
