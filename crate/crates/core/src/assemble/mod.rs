//! Whole-triangulation pipeline over the separation tree.

use serde::{Deserialize, Serialize};

use crate::geometry::{HTriangle, Scalar};
use crate::perturb::{face_gap, remove_all, PerturbError};
use crate::planar::{decompose, is_stacked, Triangulation, Vertex};
use crate::solver::{
    canvas_roles, check_hypothesis, exactify, robustify, snap_contacts, solve_contacts,
    solve_stacked, FloatRepresentation, Representation, SolverError, SolverParams,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssembleError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("piece {node}: {source}")]
    Solver { node: usize, source: SolverError },
    #[error("piece {node}: {source}")]
    Perturb { node: usize, source: PerturbError },
    #[error("face {face:?} has no usable gap: {source}")]
    Gap {
        face: [Vertex; 3],
        source: PerturbError,
    },
    #[error("gap between the outer triangles of piece {0} differs from the face gap")]
    GapMismatch(usize),
}

/// Root outer triangles, boundary budget and solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub outer: [HTriangle; 3],
    pub epsilon: Scalar,
    pub solver: SolverParams,
    pub verify: bool,
    pub drawing: bool,
    pub audit: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            outer: default_outer(&Scalar::one()),
            epsilon: Scalar::one(),
            solver: SolverParams::default(),
            verify: true,
            drawing: false,
            audit: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), AssembleError> {
        if !self.epsilon.is_positive() {
            return Err(AssembleError::Config("epsilon must be positive".into()));
        }
        let [a, b, c] = &self.outer;
        check_hypothesis([a, b, c]).map_err(|e| AssembleError::Config(e.to_string()))?;
        self.solver
            .validate()
            .map_err(|e| AssembleError::Config(e.to_string()))
    }
}

/// `(0,0,4)`, `(1,3,2)`, `(3,1,2)` scaled by `scale`.
pub fn default_outer(scale: &Scalar) -> [HTriangle; 3] {
    let t = |x: i64, y: i64, h: i64| {
        HTriangle::of(
            Scalar::from_int(x) * scale,
            Scalar::from_int(y) * scale,
            Scalar::from_int(h) * scale,
        )
    };
    [t(0, 0, 4), t(1, 3, 2), t(3, 1, 2)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Stacked,
    Contacts,
    Robustified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub restarts_used: usize,
    pub iterations: usize,
    /// Normalized units (canvas height 1).
    pub max_edge_residual: f64,
    pub max_non_edge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceLog {
    pub node: usize,
    pub vertices: Vec<Vertex>,
    pub separator: Option<[Vertex; 3]>,
    pub method: Method,
    pub epsilon: Scalar,
    /// Free margin of the parent face; absent at the root.
    pub face_margin: Option<Scalar>,
    pub solver: Option<SolverSummary>,
    pub rounds: usize,
    pub denom_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assembly {
    pub representation: Representation,
    pub pieces: Vec<PieceLog>,
}

/// Representation of `t` with the configured outer triangles.
pub fn represent(t: &Triangulation, config: &PipelineConfig) -> Result<Assembly, AssembleError> {
    config.validate()?;
    if is_stacked(t) {
        let rep = solve_stacked(t, config.outer.clone(), config.epsilon.clone())
            .map_err(|source| AssembleError::Solver { node: 0, source })?;
        let log = PieceLog {
            node: 0,
            vertices: (0..t.n()).collect(),
            separator: None,
            method: Method::Stacked,
            epsilon: config.epsilon.clone(),
            face_margin: None,
            solver: None,
            rounds: 0,
            denom_bits: rep.max_denom_bits(),
        };
        return Ok(Assembly {
            representation: rep,
            pieces: vec![log],
        });
    }

    let tree = decompose(t);
    let mut global = Representation::new(t.outer(), config.outer.clone(), config.epsilon.clone());
    let mut budgets: Vec<Scalar> = Vec::with_capacity(tree.len());
    let mut pieces = Vec::with_capacity(tree.len());
    for (i, node) in tree.nodes.iter().enumerate() {
        let piece = &node.piece;
        let outer_ids = piece.graph.outer().map(|v| piece.label(v));
        let (epsilon, face_margin) = match (node.parent, node.separator) {
            (Some(p), Some(sep)) => {
                let (gap, margin) = face_gap(&global, sep, &[])
                    .map_err(|source| AssembleError::Gap { face: sep, source })?;
                let [a, b, c] = outer_ids.map(|v| global.get(v));
                let canvas = canvas_roles([a, b, c])
                    .map_err(|source| AssembleError::Solver { node: i, source })?;
                if canvas.gap != gap {
                    return Err(AssembleError::GapMismatch(i));
                }
                (budgets[p].clone().min(margin.clone()), Some(margin))
            }
            _ => (config.epsilon.clone(), None),
        };
        let outer = outer_ids.map(|v| global.get(v).clone());
        let obstacles: Vec<HTriangle> = global
            .triangles
            .iter()
            .filter(|(v, _)| !piece.labels.contains(v))
            .map(|(_, t)| t.clone())
            .collect();
        let mut params = config.solver.clone();
        params.seed = params.seed.wrapping_add(i as u64);
        let solved = solve_piece(&piece.graph, outer, &epsilon, &params, &obstacles, i)?;
        let local = solved.rep.relabel(&piece.labels);
        for v in local.inner_vertices() {
            global.triangles.insert(v, local.get(v).clone());
        }
        pieces.push(PieceLog {
            node: i,
            vertices: piece.labels.clone(),
            separator: node.separator,
            method: solved.method,
            epsilon: epsilon.clone(),
            face_margin,
            solver: solved.stats,
            rounds: solved.rounds,
            denom_bits: local.max_denom_bits(),
        });
        budgets.push(epsilon);
    }
    Ok(Assembly {
        representation: global,
        pieces,
    })
}

struct Solved {
    rep: Representation,
    method: Method,
    stats: Option<SolverSummary>,
    rounds: usize,
}

/// One piece in local labels: exact constructor for K4, otherwise contacts
/// snapped to rationals and cleared of triple points, with inflation as the
/// fallback.
fn solve_piece(
    piece: &Triangulation,
    outer: [HTriangle; 3],
    epsilon: &Scalar,
    params: &SolverParams,
    obstacles: &[HTriangle],
    node: usize,
) -> Result<Solved, AssembleError> {
    let solver_err = |source| AssembleError::Solver { node, source };
    let perturb_err = |source| AssembleError::Perturb { node, source };
    if is_stacked(piece) {
        let rep = solve_stacked(piece, outer, epsilon.clone()).map_err(solver_err)?;
        let (rep, rounds) = remove_all(&rep, obstacles).map_err(perturb_err)?;
        return Ok(Solved {
            rep,
            method: Method::Stacked,
            stats: None,
            rounds: rounds.len(),
        });
    }
    let float = solve_contacts(piece, outer, epsilon.clone(), params).map_err(solver_err)?;
    let stats = Some(SolverSummary {
        restarts_used: float.stats.restarts_used,
        iterations: float.stats.iterations,
        max_edge_residual: float.stats.max_edge_residual,
        max_non_edge: float.stats.max_non_edge,
    });
    let snapped = snap_contacts(piece, &float)
        .map_err(solver_err)
        .and_then(|rep| remove_all(&rep, obstacles).map_err(perturb_err));
    match snapped {
        Ok((rep, rounds)) => Ok(Solved {
            rep,
            method: Method::Contacts,
            stats,
            rounds: rounds.len(),
        }),
        Err(first) => {
            let (rep, rounds) = inflate_and_clear(&float, params, obstacles).map_err(|_| first)?;
            Ok(Solved {
                rep,
                method: Method::Robustified,
                stats,
                rounds,
            })
        }
    }
}

fn inflate_and_clear(
    float: &FloatRepresentation,
    params: &SolverParams,
    obstacles: &[HTriangle],
) -> Result<(Representation, usize), String> {
    let unit = &float.frame.scale;
    let abs = |f: f64| {
        Scalar::from_f64(f)
            .map(|s| s * unit)
            .ok_or_else(|| "non-finite tolerance".to_string())
    };
    let rep = exactify(float).map_err(|e| e.to_string())?;
    let rep = robustify(
        &rep,
        &abs(params.delta)?,
        &abs(params.margin)?,
        &float.epsilon,
    )
    .map_err(|e| e.to_string())?;
    let (rep, rounds) = remove_all(&rep, obstacles).map_err(|e| e.to_string())?;
    Ok((rep, rounds.len()))
}
