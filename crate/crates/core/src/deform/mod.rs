//! Deformation of PL chains onto grid skeleta.
//!
//! A chain is clipped to the cells of a dyadic grid, pushed cell by cell
//! onto lower skeleta by radial projection from randomly selected centers,
//! and finally resolved on the `d`-cells: covered cells are emitted with
//! their net multiplicity, partially covered ones are projected away. Every
//! run carries a certificate with the homotopy prisms, the boundary tracks
//! and an exact check of
//!
//! ```text
//! out - S = ∂H + B
//! ```
//!
//! on the common refinement of all pieces.

mod canon;
mod center;
mod plane;
mod plchain;
mod polygon;
#[cfg(feature = "deform-3d")]
mod space;

use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::complex::CellComplex;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::Point;

pub use canon::{Segment, SegmentSum};
pub use center::{
    draw_limit, select_center, verify_projection_bound, CenterSelection, LoadStats, Piece, ProjectionReport,
    PILOT_DRAWS,
};
pub use plchain::{PLChain, PLSimplex, FACE_KEY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformOptions {
    pub beta: f64,
    pub seed: u64,
    pub exec: Exec,
    /// Run the squash stage (identity on polyhedral input, Lipschitz sampled).
    pub squash: bool,
    pub piece_limit: usize,
}

impl Default for DeformOptions {
    fn default() -> Self {
        DeformOptions { beta: 0.75, seed: 0, exec: Exec::Parallel, squash: true, piece_limit: 1 << 20 }
    }
}

impl DeformOptions {
    pub fn new(beta: f64, seed: u64) -> Self {
        DeformOptions { beta, seed, ..Default::default() }
    }
}

/// A polygonal piece of the homotopy `(d+1)`-chain; the vertex loop carries
/// the orientation. In space a prism is swept by a polygon: the first half
/// of `vertices` is the polygon, the second half its image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prism {
    pub vertices: Vec<Point>,
    pub coef: i64,
    pub stage: usize,
}

impl Prism {
    /// Signed area of the vertex loop (planar prisms).
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let m = v.len();
        (0..m).map(|i| v[i][0] * v[(i + 1) % m][1] - v[(i + 1) % m][0] * v[i][1]).sum::<f64>() / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum EdgeResolution {
    /// Net multiplicity is constant on the cell; emitted with `coef`.
    Covered { coef: i64 },
    /// Partially covered; projected to the cell boundary from `split`
    /// (edge parameter in `[0,1]`).
    Collapsed { split: f64 },
    /// Pieces cancel completely.
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeDecision {
    pub edge: usize,
    pub resolution: EdgeResolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum FaceResolution {
    Covered { coef: i64 },
    /// Emptied by projection from `point`, a point of the face off every piece.
    Collapsed { point: Point },
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceDecision {
    pub face: usize,
    pub resolution: FaceResolution,
}

/// Every random choice of a run: projection centers and `d`-cell decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformPlan {
    pub beta: f64,
    pub seed: u64,
    pub centers: Vec<CenterSelection>,
    pub edges: Vec<EdgeDecision>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faces: Vec<FaceDecision>,
}

impl DeformPlan {
    pub fn empty(beta: f64, seed: u64) -> Self {
        DeformPlan { beta, seed, centers: Vec::new(), edges: Vec::new(), faces: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationCertificate {
    pub mass_in: f64,
    pub mass_out: f64,
    pub size_in: f64,
    pub size_out: f64,
    /// Mass after each stage (squash, descent, resolution) over `mass_in`.
    pub stage_ratios: Vec<f64>,
    pub homotopy: Vec<Prism>,
    pub homotopy_mass: f64,
    pub boundary_transport: Vec<Segment>,
    /// Swept quadrilaterals of the boundary transport for `d = 2`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transport_faces: Vec<Prism>,
    /// Largest circumradius of a grid cell.
    pub grid_mesh: f64,
    pub rotundity: f64,
    pub squash_lipschitz: f64,
    pub squash_maps: usize,
    pub identity_holds: bool,
    pub identity_residual: f64,
    pub covered_cells: usize,
    pub collapsed_cells: usize,
    pub plan: DeformPlan,
}

impl DeformationCertificate {
    pub fn mass_ratio(&self) -> f64 {
        if self.mass_in > 0.0 {
            self.mass_out / self.mass_in
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub x: Point,
    pub weight: f64,
    /// Unit tangent of the sampled set; the weight follows its stretch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tangent: Option<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRatio {
    pub dim: usize,
    pub cell: usize,
    pub weight_in: f64,
    pub weight_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTransport {
    pub points: Vec<WeightedPoint>,
    pub weight_in: f64,
    pub weight_out: f64,
    /// Grouped by the cell each point started in.
    pub cells: Vec<CellRatio>,
}

fn check_shape(s_dim: usize, n: usize, k: &CellComplex) -> Result<()> {
    if k.ambient() != n {
        return Err(Error::DimensionMismatch(format!("chain in R^{n}, grid in R^{}", k.ambient())));
    }
    match (s_dim, n) {
        (1, 2) => Ok(()),
        #[cfg(feature = "deform-3d")]
        (2, 3) => Ok(()),
        (d, n) => Err(Error::Unsupported(format!("deformation of {d}-chains in R^{n}"))),
    }
}

/// Deforms `s` onto the `d`-skeleton of the grid `k`.
pub fn deform_chain(s: &PLChain, k: &CellComplex, beta: f64, seed: u64) -> Result<(Chain, DeformationCertificate)> {
    deform_chain_with(s, k, &DeformOptions::new(beta, seed))
}

pub fn deform_chain_with(s: &PLChain, k: &CellComplex, opts: &DeformOptions) -> Result<(Chain, DeformationCertificate)> {
    check_shape(s.dim(), s.ambient(), k)?;
    match s.ambient() {
        2 => plane::deform_plane(s, k, opts),
        #[cfg(feature = "deform-3d")]
        3 => space::deform_space(s, k, opts),
        _ => unreachable!(),
    }
}

/// Transports weighted points (samples of a 1-dimensional set) through the
/// stage maps. Centers are selected against the points themselves; without
/// a chain there is no coverage information, so the resolution stage leaves
/// points on the skeleton in place.
pub fn deform_pointset(x: &[WeightedPoint], k: &CellComplex, beta: f64, seed: u64) -> Result<PointTransport> {
    center::check_beta(beta)?;
    let opts = DeformOptions::new(beta, seed);
    Ok(plane::transport_plane(x, k, &DeformPlan::empty(beta, seed), &opts)?.0)
}

/// Transports points through the maps of an earlier run, e.g. the plan
/// recorded in a [`DeformationCertificate`].
pub fn deform_pointset_with(x: &[WeightedPoint], k: &CellComplex, plan: &DeformPlan, exec: Exec) -> Result<PointTransport> {
    let opts = DeformOptions { beta: plan.beta, seed: plan.seed, exec, ..Default::default() };
    Ok(plane::transport_plane(x, k, plan, &opts)?.0)
}

/// Ball `B_Δ` in which centers of grid cell `cell` are drawn.
pub fn center_ball(k: &CellComplex, cell: usize) -> Result<(Point, f64)> {
    let (c, r) = plane::cell_ball(k, cell)?;
    Ok((c.to_vec(), r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoeffGroup;
    use crate::complex::GridSpec;

    fn grid(level: u32) -> CellComplex {
        CellComplex::dyadic_grid(&GridSpec::unit(2, level)).unwrap()
    }

    #[test]
    fn diagonal_becomes_a_staircase() {
        let k = grid(2);
        let s = PLChain::polyline(CoeffGroup::integers(), &[vec![0.0, 0.0], vec![1.0, 1.0]], false, 1).unwrap();
        let (out, cert) = deform_chain(&s, &k, 0.75, 7).unwrap();
        assert!(cert.identity_holds, "residual {}", cert.identity_residual);
        let b = out.boundary(&k).unwrap();
        assert_eq!(b.len(), 2);
        assert!((out.mass(&k) - 2.0).abs() < 1e-12);
        assert!(cert.squash_lipschitz <= 4.0 + 1e-9);
    }

    #[test]
    fn grid_chains_are_fixed() {
        let k = grid(2);
        let pts = vec![vec![0.25, 0.25], vec![0.75, 0.25], vec![0.75, 0.5], vec![0.25, 0.5]];
        let s = PLChain::polyline(CoeffGroup::integers(), &pts, true, 2).unwrap();
        let (out, cert) = deform_chain(&s, &k, 0.75, 1).unwrap();
        assert!(cert.homotopy.is_empty());
        assert!(cert.identity_holds);
        assert_eq!(out.len(), 6);
        assert!(out.iter().all(|(_, g)| g.abs() == 2));
    }

    #[test]
    fn closed_loop_stays_closed() {
        let k = grid(3);
        let pts = vec![vec![0.13, 0.21], vec![0.81, 0.33], vec![0.52, 0.9], vec![0.3, 0.6]];
        for g in [CoeffGroup::integers(), CoeffGroup::z2(), CoeffGroup::mod_q(3).unwrap()] {
            let s = PLChain::polyline(g, &pts, true, 1).unwrap();
            let (out, cert) = deform_chain(&s, &k, 0.75, 11).unwrap();
            assert!(out.boundary(&k).unwrap().is_zero());
            assert!(cert.identity_holds, "residual {}", cert.identity_residual);
        }
    }

    #[test]
    fn open_path_with_interior_ends() {
        let k = grid(2);
        let s = PLChain::polyline(CoeffGroup::integers(), &[vec![0.1, 0.2], vec![0.8, 0.9]], false, 1).unwrap();
        let (out, cert) = deform_chain(&s, &k, 0.75, 5).unwrap();
        assert!(cert.identity_holds, "residual {}", cert.identity_residual);
        assert!(cert.collapsed_cells > 0);
        let _ = out;
    }

    #[test]
    fn pointset_on_skeleton_is_fixed() {
        let k = grid(2);
        let pts: Vec<WeightedPoint> =
            (0..10).map(|i| WeightedPoint { x: vec![0.25, i as f64 / 10.0], weight: 0.1, tangent: None }).collect();
        let t = deform_pointset(&pts, &k, 0.75, 3).unwrap();
        assert_eq!(t.points, pts);
        assert!(deform_pointset(&[], &k, 0.75, 3).unwrap().points.is_empty());
    }
}
