//! File formats: complexes, chains, PL chains, problems, OFF meshes and
//! report JSON with 17-significant-digit floats.

use std::collections::BTreeSet;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use crate::chain::Chain;
use crate::coeff::CoeffGroup;
use crate::complex::{CellComplex, ComplexKind, GridKey, GridSpec, Subcomplex};
use crate::deform::{PLChain, PLSimplex};
use crate::error::{Error, Result};
use crate::flatnorm::{FillResult, FlatNormOptions, FlatNormResult};
use crate::functional::{Integrand, PolyhedralSet, SetFunction};
use crate::geometry::{Point, Polytope};
use crate::homology::HomologyGroup;
use crate::plateau::{Comparison, Condition, PlateauObjective, PlateauProblem, SizeDifference, SolveOptions, SolveReport};

pub const FORMAT_VERSION: u32 = 1;

/// `%.17g`, keeping a trailing `.0` on integral values.
pub fn fmt_f64(v: f64) -> String {
    if !v.is_finite() {
        return "null".into();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let trim = |s: &str| -> String {
        if s.contains('.') {
            let t = s.trim_end_matches('0');
            if t.ends_with('.') {
                format!("{t}0")
            } else {
                t.to_string()
            }
        } else {
            s.to_string()
        }
    };
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim(&format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mant))
    }
}

#[derive(Clone, Copy, Default)]
struct Compact17;

impl Formatter for Compact17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        w.write_all(fmt_f64(value as f64).as_bytes())
    }
}

struct Pretty17(PrettyFormatter<'static>);

impl Formatter for Pretty17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        w.write_all(fmt_f64(value as f64).as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Compact17);
    value.serialize(&mut ser).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("json is utf-8"))
}

pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Pretty17(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("json is utf-8"))
}

/// Deserializes with the JSON path of the offending field in the error.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse(format!("at `{path}`: {}", e.inner()))
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    from_json(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

// ---------------------------------------------------------------- complexes

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellRecord {
    pub vertices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faces: Vec<(usize, i32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridKey>,
}

/// Complex JSON. On input, either `grid`, or `vertices` with `simplices`
/// (oriented top simplices), or a previously exported simplicial complex
/// (`vertices` with `cells`); `path` loads another complex file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ComplexFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ComplexKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simplices: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<Vec<CellRecord>>>,
}

impl ComplexFile {
    pub fn grid(spec: GridSpec) -> Self {
        ComplexFile { grid: Some(spec), ..Default::default() }
    }

    /// Full export: coordinates, cells with oriented incidences, fingerprint.
    pub fn export(k: &CellComplex) -> Self {
        let cells = (0..=k.dim())
            .map(|d| {
                (0..k.count(d))
                    .map(|id| CellRecord {
                        vertices: k.cell(d, id).vertices.clone(),
                        faces: if d == 0 { vec![] } else { k.faces(d, id).to_vec() },
                        grid: k.cell(d, id).grid.clone(),
                    })
                    .collect()
            })
            .collect();
        ComplexFile {
            path: None,
            kind: Some(k.kind()),
            ambient: Some(k.ambient()),
            grid: k.grid_spec().cloned(),
            fingerprint: Some(k.fingerprint()),
            vertices: Some(k.coords().to_vec()),
            simplices: None,
            counts: Some(k.counts()),
            cells: Some(cells),
        }
    }

    pub fn build(&self, base: Option<&Path>) -> Result<CellComplex> {
        let k = if let Some(p) = &self.path {
            let full = resolve(base, p);
            let inner: ComplexFile = read_json(&full)?;
            inner.build(full.parent())?
        } else if let Some(spec) = &self.grid {
            CellComplex::dyadic_grid(spec)?
        } else {
            let coords = self.vertices.clone().ok_or_else(|| Error::Parse("complex needs `grid`, `path` or `vertices`".into()))?;
            let tops: Vec<Vec<usize>> = match (&self.simplices, &self.cells) {
                (Some(s), _) => s.clone(),
                (None, Some(cells)) => {
                    if self.kind.is_some_and(|k| k != ComplexKind::Simplicial) {
                        return Err(Error::Parse("only simplicial complexes can be rebuilt from `cells`".into()));
                    }
                    maximal_simplices(cells)
                }
                (None, None) => return Err(Error::Parse("complex needs `simplices` next to `vertices`".into())),
            };
            CellComplex::from_simplices(coords, &tops)?
        };
        if let Some(fp) = &self.fingerprint {
            let have = k.fingerprint();
            if &have != fp {
                return Err(Error::Parse(format!("complex fingerprint mismatch: file says {fp}, rebuilt {have}")));
            }
        }
        Ok(k)
    }
}

fn maximal_simplices(cells: &[Vec<CellRecord>]) -> Vec<Vec<usize>> {
    let mut covered: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut out = Vec::new();
    for level in cells.iter().rev() {
        for c in level {
            let mut key = c.vertices.clone();
            key.sort_unstable();
            if !covered.contains(&key) {
                out.push(c.vertices.clone());
            }
            for i in 0..key.len() {
                let mut f = key.clone();
                f.remove(i);
                if !f.is_empty() {
                    covered.insert(f);
                }
            }
            covered.insert(key);
        }
    }
    out
}

fn resolve(base: Option<&Path>, p: &str) -> PathBuf {
    let pb = PathBuf::from(p);
    match base {
        Some(b) if pb.is_relative() => b.join(pb),
        _ => pb,
    }
}

// ------------------------------------------------------------------- chains

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyedCoeff {
    pub anchor: Vec<i64>,
    pub axes: Vec<usize>,
    pub value: i64,
}

/// Chain JSON: `{"dim":1,"coeffs":[[cellId,value],...]}`, optionally bound to
/// a complex by fingerprint. Grid cells may also be named by key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub dim: usize,
    #[serde(default)]
    pub coeffs: Vec<(usize, i64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub keyed: Vec<KeyedCoeff>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<CoeffGroup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complex: Option<String>,
}

impl ChainFile {
    pub fn from_chain(c: &Chain, k: &CellComplex) -> Self {
        ChainFile {
            dim: c.dim(),
            coeffs: c.iter().collect(),
            keyed: vec![],
            group: Some(c.group()),
            complex: Some(k.fingerprint()),
        }
    }

    /// Builds the chain over `group` (the file's own group wins if given).
    pub fn build(&self, k: &CellComplex, group: CoeffGroup) -> Result<Chain> {
        if let Some(fp) = &self.complex {
            if *fp != k.fingerprint() {
                return Err(Error::Parse(format!("chain is bound to complex {fp}, not to {}", k.fingerprint())));
            }
        }
        let g = self.group.unwrap_or(group);
        if g != group {
            return Err(Error::GroupMismatch(g.to_string(), group.to_string()));
        }
        if self.dim > k.dim() {
            return Err(Error::InvalidCell(format!("{}-chain on a {}-dimensional complex", self.dim, k.dim())));
        }
        let mut c = Chain::zero(g, self.dim);
        for &(id, v) in &self.coeffs {
            c.add_term(id, v)?;
        }
        for kc in &self.keyed {
            let key = GridKey { anchor: kc.anchor.clone(), axes: kc.axes.clone() };
            if key.axes.len() != self.dim {
                return Err(Error::InvalidCell(format!("key {key:?} is not a {}-cell", self.dim)));
            }
            let id = k.cell_id(&key).ok_or_else(|| Error::InvalidCell(format!("no grid cell {key:?}")))?;
            c.add_term(id, kc.value)?;
        }
        c.validate(k)?;
        Ok(c)
    }
}

/// A set of cells whose closure forms a subcomplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SubcomplexSpec {
    /// `(dim, id)` pairs.
    #[serde(default)]
    pub cells: Vec<(usize, usize)>,
    #[serde(default)]
    pub keys: Vec<GridKey>,
    /// Adds the closure of the support of the boundary of this chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_of: Option<ChainFile>,
}

impl SubcomplexSpec {
    pub fn build(&self, k: &CellComplex, group: CoeffGroup) -> Result<Subcomplex> {
        let mut seeds: Vec<(usize, usize)> = self.cells.clone();
        for key in &self.keys {
            let id = k.cell_id(key).ok_or_else(|| Error::InvalidCell(format!("no grid cell {key:?}")))?;
            seeds.push((key.axes.len(), id));
        }
        if let Some(c) = &self.boundary_of {
            let ch = c.build(k, group)?;
            if ch.dim() > 0 {
                let b = ch.boundary(k)?;
                seeds.extend(b.iter().map(|(id, _)| (b.dim(), id)));
            }
        }
        for &(d, id) in &seeds {
            if d > k.dim() || id >= k.count(d) {
                return Err(Error::InvalidCell(format!("({d}, {id})")));
            }
        }
        Ok(k.closure(&seeds)?.0)
    }
}

// ---------------------------------------------------------------- PL chains

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolylineRecord {
    pub points: Vec<Point>,
    #[serde(default)]
    pub closed: bool,
    #[serde(default = "one")]
    pub coef: i64,
}

fn one() -> i64 {
    1
}

/// PL chain JSON: explicit simplices and/or polylines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PLChainFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<CoeffGroup>,
    #[serde(default = "two")]
    pub n: usize,
    #[serde(default = "one_usize")]
    pub d: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub simplices: Vec<PLSimplex>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub polylines: Vec<PolylineRecord>,
}

fn two() -> usize {
    2
}

fn one_usize() -> usize {
    1
}

impl PLChainFile {
    pub fn from_chain(c: &PLChain) -> Self {
        PLChainFile { group: Some(c.group()), n: c.ambient(), d: c.dim(), simplices: c.simplices().to_vec(), polylines: vec![] }
    }

    pub fn build(&self, default_group: CoeffGroup) -> Result<PLChain> {
        let g = self.group.unwrap_or(default_group);
        let mut c = PLChain::new(g, self.n, self.d);
        for s in &self.simplices {
            c.push(s.vertices.clone(), s.coef)?;
        }
        if !self.polylines.is_empty() && self.d != 1 {
            return Err(Error::Parse("polylines describe 1-chains".into()));
        }
        for p in &self.polylines {
            for s in PLChain::polyline(g, &p.points, p.closed, p.coef)?.simplices() {
                c.push(s.vertices.clone(), s.coef)?;
            }
        }
        Ok(c)
    }
}

// --------------------------------------------------------------------- sets

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceRecord {
    pub vertices: Vec<Point>,
    pub dim: usize,
}

/// Polyhedral set JSON: convex pieces plus an unrectifiable mass tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetFile {
    pub pieces: Vec<PieceRecord>,
    #[serde(default)]
    pub irr_mass: f64,
    #[serde(default)]
    pub irr_tag: String,
}

impl SetFile {
    pub fn build(&self) -> Result<PolyhedralSet> {
        let pieces = self.pieces.iter().map(|p| Polytope::new(p.vertices.clone(), p.dim)).collect::<Result<Vec<_>>>()?;
        PolyhedralSet::new(pieces, self.irr_mass, self.irr_tag.clone())
    }
}

// ---------------------------------------------------------------------- OFF

#[derive(Debug, Clone, PartialEq)]
pub struct OffMesh {
    pub vertices: Vec<Point>,
    pub faces: Vec<Vec<usize>>,
}

/// Reads an OFF mesh (`OFF`, counts line, vertices, faces); `#` comments are
/// skipped.
pub fn read_off(text: &str) -> Result<OffMesh> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace())
        .map(str::to_string)
        .collect::<Vec<_>>()
        .into_iter();
    let bad = |m: &str| Error::Parse(format!("OFF: {m}"));
    let head = tokens.next().ok_or_else(|| bad("empty input"))?;
    let (dim, first) = match head.as_str() {
        "OFF" => (3usize, None),
        "nOFF" => (tokens.next().ok_or_else(|| bad("missing dimension"))?.parse().map_err(|_| bad("dimension"))?, None),
        other if other.ends_with("OFF") => return Err(bad(&format!("unsupported header {other}"))),
        other => (3, Some(other.to_string())),
    };
    let mut next_num = |what: &str| -> Result<String> { tokens.next().ok_or_else(|| bad(&format!("missing {what}"))) };
    let nv: usize = match first {
        Some(f) => f.parse().map_err(|_| bad("vertex count"))?,
        None => next_num("vertex count")?.parse().map_err(|_| bad("vertex count"))?,
    };
    let nf: usize = next_num("face count")?.parse().map_err(|_| bad("face count"))?;
    let _ne: usize = next_num("edge count")?.parse().map_err(|_| bad("edge count"))?;
    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let p: Vec<f64> = (0..dim)
            .map(|_| next_num("coordinate")?.parse::<f64>().map_err(|_| bad(&format!("coordinate of vertex {i}"))))
            .collect::<Result<_>>()?;
        vertices.push(p);
    }
    let mut faces = Vec::with_capacity(nf);
    for i in 0..nf {
        let m: usize = next_num("face size")?.parse().map_err(|_| bad(&format!("size of face {i}")))?;
        let f: Vec<usize> = (0..m)
            .map(|_| next_num("face index")?.parse::<usize>().map_err(|_| bad(&format!("index in face {i}"))))
            .collect::<Result<_>>()?;
        if let Some(&v) = f.iter().find(|&&v| v >= nv) {
            return Err(bad(&format!("face {i} references vertex {v} of {nv}")));
        }
        faces.push(f);
    }
    Ok(OffMesh { vertices, faces })
}

impl OffMesh {
    /// Trailing zero coordinates beyond `n` are dropped (planar curves are
    /// usually stored with `z = 0`).
    fn point(&self, i: usize, n: usize) -> Result<Point> {
        let p = &self.vertices[i];
        if p.len() < n || p[n..].iter().any(|&x| x != 0.0) {
            return Err(Error::DimensionMismatch(format!("vertex {i} does not lie in R^{n}")));
        }
        Ok(p[..n].to_vec())
    }

    /// Boundary curves: two-vertex faces are segments, longer faces closed
    /// loops.
    pub fn curves(&self, group: CoeffGroup, n: usize) -> Result<PLChain> {
        let mut c = PLChain::new(group, n, 1);
        for f in &self.faces {
            let pts: Vec<Point> = f.iter().map(|&i| self.point(i, n)).collect::<Result<_>>()?;
            let closed = pts.len() > 2;
            for s in PLChain::polyline(group, &pts, closed, 1)?.simplices() {
                c.push(s.vertices.clone(), s.coef)?;
            }
        }
        Ok(c)
    }

    /// Surfaces: faces are fan-triangulated, orientation from vertex order.
    pub fn surface(&self, group: CoeffGroup, n: usize) -> Result<PLChain> {
        let mut c = PLChain::new(group, n, 2);
        for f in &self.faces {
            for i in 1..f.len().saturating_sub(1) {
                c.push(vec![self.point(f[0], n)?, self.point(f[i], n)?, self.point(f[i + 1], n)?], 1)?;
            }
        }
        Ok(c)
    }
}

// ----------------------------------------------------------------- problems

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConditionBlock {
    /// `∂S = T`; `T` given directly or as the boundary of a `d`-chain.
    CycleBoundary {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        chain: Option<ChainFile>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        boundary_of: Option<ChainFile>,
    },
    HomClass { b: SubcomplexSpec, sigma: Vec<i64> },
    Subgroup { b: SubcomplexSpec, generators: Vec<ChainFile> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObjectiveBlock {
    #[default]
    Size,
    Mass,
    Phi {
        integrand: String,
        #[serde(default = "const_one")]
        lambda: String,
    },
}

fn const_one() -> String {
    "const:1".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SolverBlock {
    pub plateau: SolveOptions,
    pub flat: FlatNormOptions,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: u32,
    pub complex: ComplexFile,
    pub group: CoeffGroup,
    pub d: usize,
    pub condition: ConditionBlock,
    #[serde(default)]
    pub objective: ObjectiveBlock,
    #[serde(default = "yes")]
    pub exclude_b: bool,
    #[serde(default)]
    pub solver: SolverBlock,
}

fn yes() -> bool {
    true
}

pub struct LoadedProblem {
    pub complex: CellComplex,
    pub problem: PlateauProblem,
    pub options: SolveOptions,
    pub flat: FlatNormOptions,
    pub seed: u64,
}

impl ProblemFile {
    pub fn read(path: &Path) -> Result<(Self, Option<PathBuf>)> {
        let p: ProblemFile = read_json(path)?;
        Ok((p, path.parent().map(Path::to_path_buf)))
    }

    pub fn load(&self, base: Option<&Path>) -> Result<LoadedProblem> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Parse(format!("at `version`: expected {FORMAT_VERSION}, got {}", self.version)));
        }
        let k = self.complex.build(base)?;
        let g = self.group;
        if self.d == 0 || self.d > k.dim() {
            return Err(Error::Parse(format!("at `d`: {} is not in 1..={}", self.d, k.dim())));
        }
        let condition = match &self.condition {
            ConditionBlock::CycleBoundary { chain, boundary_of } => {
                let t = match (chain, boundary_of) {
                    (Some(c), None) => c.build(&k, g)?,
                    (None, Some(c)) => c.build(&k, g)?.boundary(&k)?,
                    _ => {
                        return Err(Error::Parse(
                            "at `condition`: give exactly one of `chain` and `boundary_of`".into(),
                        ))
                    }
                };
                if t.dim() + 1 != self.d {
                    return Err(Error::Parse(format!("at `condition`: boundary has dimension {}, expected {}", t.dim(), self.d - 1)));
                }
                Condition::CycleBoundary(t)
            }
            ConditionBlock::HomClass { b, sigma } => {
                Condition::HomClass { b: b.build(&k, g)?, sigma: sigma.iter().map(|&x| x as i128).collect() }
            }
            ConditionBlock::Subgroup { b, generators } => Condition::Subgroup {
                b: b.build(&k, g)?,
                generators: generators.iter().map(|c| c.build(&k, g)).collect::<Result<_>>()?,
            },
        };
        let objective = match &self.objective {
            ObjectiveBlock::Size => PlateauObjective::Size,
            ObjectiveBlock::Mass => PlateauObjective::Mass,
            ObjectiveBlock::Phi { integrand, lambda } => {
                PlateauObjective::Phi { integrand: Integrand::parse(integrand)?, lambda: SetFunction::parse(lambda)? }
            }
        };
        let problem = PlateauProblem { d: self.d, group: g, condition, objective, exclude_b: self.exclude_b };
        Ok(LoadedProblem { complex: k, problem, options: self.solver.plateau, flat: self.solver.flat, seed: self.solver.seed })
    }
}

// ------------------------------------------------------------------ reports

pub fn chain_json(c: &Chain, k: &CellComplex) -> Value {
    json!({
        "dim": c.dim(),
        "group": c.group(),
        "complex": k.fingerprint(),
        "coeffs": c.iter().map(|(id, v)| json!([id, v])).collect::<Vec<_>>(),
        "mass": c.mass(k),
        "size": c.size(k),
    })
}

pub fn subcomplex_json(s: &Subcomplex) -> Value {
    json!({ "cells": s.cells.iter().map(|c| c.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>() })
}

pub fn solve_report_json(r: &SolveReport, k: &CellComplex) -> Value {
    json!({
        "value": r.value,
        "method": r.method,
        "proven_optimal": r.proven_optimal,
        "lower_bound": r.lower_bound,
        "excluded_value": r.excluded_value,
        "nodes": r.nodes,
        "oracle_calls": r.oracle_calls,
        "chain": r.chain.as_ref().map(|c| chain_json(c, k)),
        "set": r.set.as_ref().map(subcomplex_json),
        "runtime_ms": r.runtime_ms,
    })
}

pub fn comparison_json(c: &Comparison, k: &CellComplex) -> Value {
    json!({
        "size_side": solve_report_json(&c.size_side, k),
        "set_side": solve_report_json(&c.set_side, k),
        "both_optimal": c.both_optimal,
        "equal": c.equal,
        "interval": [c.interval.0, c.interval.1],
        "chain_below_set": c.chain_below_set,
    })
}

pub fn size_difference_json(s: &SizeDifference) -> Value {
    json!({ "inf_t": s.inf_t, "inf_t_prime": s.inf_t_prime, "size_r": s.size_r, "holds": s.holds })
}

pub fn flat_norm_json(r: &FlatNormResult, k: &CellComplex) -> Value {
    json!({
        "value": r.value,
        "method": r.method,
        "lower_bound_only": r.lower_bound_only,
        "relaxation": r.relaxation,
        "nodes": r.nodes,
        "witness_q": chain_json(&r.witness_q, k),
        "witness_r": chain_json(&r.witness_r, k),
    })
}

pub fn fill_json(r: &FillResult, k: &CellComplex) -> Value {
    json!({
        "beta": chain_json(&r.beta, k),
        "mass": r.mass,
        "flat_norm": r.flat_norm,
        "ratio": r.ratio,
    })
}

pub fn homology_json(h: &HomologyGroup, k: &CellComplex) -> Value {
    json!({
        "dim": h.dim,
        "group": h.group,
        "reduced": h.reduced,
        "free_rank": h.free_rank,
        "torsion": h.torsion,
        "orders": h.orders(),
        "generators": h.basis_cycles.iter().map(|c| chain_json(c, k)).collect::<Vec<_>>(),
    })
}

/// Removes timing keys (`runtime_ms`, `elapsed_ms`) recursively, for
/// determinism comparisons.
pub fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.retain(|key, _| key != "runtime_ms" && key != "elapsed_ms");
            for x in m.values_mut() {
                strip_timing(x);
            }
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "0.10000000000000001");
        assert_eq!(fmt_f64(1.0), "1.0");
        assert_eq!(fmt_f64(2.5), "2.5");
        assert_eq!(fmt_f64(1e-7), "9.9999999999999995e-8");
        assert_eq!(fmt_f64(1e20), "1.0e20");
        for v in [0.1, 1.0 / 3.0, 123456.789, -2.0f64.sqrt(), 6.02e23, 1e-300] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn pretty_and_compact_agree() {
        let v = json!({"a": [0.1, 2.0], "b": {"c": 1e-9}});
        let a: Value = serde_json::from_str(&to_json(&v).unwrap()).unwrap();
        let b: Value = serde_json::from_str(&to_json_pretty(&v).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(to_json(&v).unwrap().contains("0.10000000000000001"));
    }

    #[test]
    fn unknown_fields_report_their_path() {
        let text = r#"{"version":1,"complex":{"grid":{"bbox":[[0,0],[1,1]],"level":1,"bogus":2}},
            "group":{"kind":"Z"},"d":1,"condition":{"kind":"cycle-boundary","chain":{"dim":0,"coeffs":[]}}}"#;
        let e = from_json::<ProblemFile>(text).unwrap_err().to_string();
        assert!(e.contains("complex.grid"), "{e}");
        assert!(e.contains("bogus"), "{e}");
    }

    #[test]
    fn complex_round_trip() {
        let k = CellComplex::dyadic_grid(&GridSpec::unit(2, 1)).unwrap();
        let f = ComplexFile::export(&k);
        let text = to_json(&f).unwrap();
        let back: ComplexFile = from_json(&text).unwrap();
        assert_eq!(back.build(None).unwrap().fingerprint(), k.fingerprint());
        let t = CellComplex::from_simplices(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            &[vec![0, 1, 2], vec![1, 3, 2]],
        )
        .unwrap();
        let f = ComplexFile::export(&t);
        let back: ComplexFile = from_json(&to_json(&f).unwrap()).unwrap();
        assert_eq!(back.build(None).unwrap().fingerprint(), t.fingerprint());
    }

    #[test]
    fn off_curves() {
        let text = "OFF\n# square\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let m = read_off(text).unwrap();
        let c = m.curves(CoeffGroup::integers(), 2).unwrap();
        assert_eq!(c.simplices().len(), 4);
        assert!(c.boundary().unwrap().is_empty());
        assert!(read_off("OFF\n1 1 0\n0 0 0\n2 0 5\n").is_err());
    }
}
