//! Radial grids, cell-averaged profiles, bathtub filling, asymmetry and the
//! shell competitor.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{FlockError, Result};
use crate::quadrature::{graded_both, rule};
use crate::radial_kernel::{ball_radius_for_volume, ball_volume, sphere_area, KernelParams};

#[derive(Debug)]
struct GridData {
    dim: usize,
    edges: Vec<f64>,
    volumes: Vec<f64>,
    fingerprint: u64,
}

/// Cell decomposition `0 = e_0 < e_1 < ... < e_M` of a radial interval.
/// Cheap to clone.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    inner: Arc<GridData>,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim && self.inner.edges == other.inner.edges)
    }
}

/// `|S^{N-1}| (b^N - a^N) / N`, with the difference factored so thin shells
/// far from the origin keep their digits.
pub fn shell_volume(dim: usize, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = dim as i32;
    let mut sum = 0.0;
    for k in 0..n {
        sum += b.powi(n - 1 - k) * a.powi(k);
    }
    sphere_area(dim) / dim as f64 * (b - a) * sum
}

impl RadialGrid {
    pub fn from_edges(dim: usize, edges: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(FlockError::InvalidGrid("dimension must be at least 1".into()));
        }
        if edges.len() < 2 {
            return Err(FlockError::InvalidGrid("need at least one cell".into()));
        }
        if edges[0] != 0.0 {
            return Err(FlockError::InvalidGrid("first edge must be 0".into()));
        }
        for w in edges.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(FlockError::InvalidGrid(format!(
                    "edges must be finite and strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        let volumes = edges.windows(2).map(|w| shell_volume(dim, w[0], w[1])).collect();
        let mut h = Sha256::new();
        h.update((dim as u64).to_le_bytes());
        for e in &edges {
            h.update(e.to_bits().to_le_bytes());
        }
        let digest = h.finalize();
        let mut first = [0u8; 8];
        first.copy_from_slice(&digest[..8]);
        Ok(Self {
            inner: Arc::new(GridData {
                dim,
                edges,
                volumes,
                fingerprint: u64::from_le_bytes(first),
            }),
        })
    }

    pub fn uniform(dim: usize, r_max: f64, cells: usize) -> Result<Self> {
        if !(r_max > 0.0) || cells == 0 {
            return Err(FlockError::InvalidGrid(format!(
                "uniform grid needs r_max > 0 and cells > 0 (got {r_max}, {cells})"
            )));
        }
        let edges = (0..=cells).map(|k| r_max * k as f64 / cells as f64).collect();
        Self::from_edges(dim, edges)
    }

    /// Uniform grid whose edges hit every point of `breakpoints` exactly.
    /// Nearby edges are moved onto a breakpoint; otherwise the point is
    /// inserted.
    pub fn with_breakpoints(dim: usize, r_max: f64, cells: usize, breakpoints: &[f64]) -> Result<Self> {
        let base = Self::uniform(dim, r_max, cells)?;
        let h = r_max / cells as f64;
        let mut edges = base.edges().to_vec();
        let mut locked = vec![false; edges.len()];
        locked[0] = true;
        *locked.last_mut().unwrap() = true;
        let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|&p| p > 0.0 && p < r_max).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        for p in pts {
            let k = edges.partition_point(|&e| e < p);
            if edges[k] == p {
                locked[k] = true;
                continue;
            }
            let near = if p - edges[k - 1] < edges[k] - p { k - 1 } else { k };
            if !locked[near] && (edges[near] - p).abs() <= 0.25 * h {
                edges[near] = p;
                locked[near] = true;
            } else {
                edges.insert(k, p);
                locked.insert(k, true);
            }
        }
        Self::from_edges(dim, edges)
    }

    /// This grid with the given radii added as edges (points outside
    /// `(0, r_max)` or within roundoff of an existing edge are ignored).
    pub fn refine_at(&self, points: &[f64]) -> Result<Self> {
        let mut edges = self.edges().to_vec();
        let r_max = self.r_max();
        let tol = 1e-12 * r_max;
        let mut changed = false;
        for &p in points {
            if !(p > tol && p < r_max - tol) {
                continue;
            }
            let k = edges.partition_point(|&e| e < p);
            if edges[k] - p > tol && p - edges[k - 1] > tol {
                edges.insert(k, p);
                changed = true;
            }
        }
        if !changed {
            return Ok(self.clone());
        }
        Self::from_edges(self.dim(), edges)
    }

    /// The nearest edge when `r` is within roundoff of one, else `r`.
    pub fn snap(&self, r: f64) -> f64 {
        let e = self.edges();
        let tol = 1e-12 * self.r_max();
        let k = e.partition_point(|&x| x < r);
        for j in [k.saturating_sub(1), k.min(e.len() - 1)] {
            if (e[j] - r).abs() <= tol {
                return e[j];
            }
        }
        r
    }

    /// The same grid dilated by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_edges(self.dim(), self.edges().iter().map(|e| e * factor).collect())
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.inner.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edges(&self) -> &[f64] {
        &self.inner.edges
    }

    pub fn volumes(&self) -> &[f64] {
        &self.inner.volumes
    }

    pub fn r_max(&self) -> f64 {
        *self.inner.edges.last().unwrap()
    }

    pub fn capacity(&self) -> f64 {
        self.volumes().iter().sum()
    }

    pub fn max_width(&self) -> f64 {
        self.edges().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges().windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn fingerprint(&self) -> u64 {
        self.inner.fingerprint
    }

    /// Index of the cell containing `r` (the last cell for `r >= r_max`).
    pub fn cell_of(&self, r: f64) -> usize {
        let k = self.edges().partition_point(|&e| e <= r);
        k.clamp(1, self.len()) - 1
    }

    /// Volume of cell `i` intersected with the shell `a < |x| < b`.
    pub fn cell_overlap(&self, i: usize, a: f64, b: f64) -> f64 {
        let (lo, hi) = (self.edges()[i], self.edges()[i + 1]);
        let (x, y) = (lo.max(a), hi.min(b));
        if y <= x {
            0.0
        } else if x == lo && y == hi {
            self.volumes()[i]
        } else {
            shell_volume(self.dim(), x, y)
        }
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if !(r >= 0.0) || r > self.r_max() {
            return Err(FlockError::OutOfRange { radius: r, r_max: self.r_max() });
        }
        Ok(())
    }
}

/// Cell-averaged radial density with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: RadialGrid,
    values: Vec<f64>,
    mass: f64,
}

impl RadialProfile {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FlockError::InvalidGrid(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        for (cell, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(FlockError::InvalidProfile { cell, value });
            }
        }
        let mass = values.iter().zip(grid.volumes()).map(|(v, w)| v * w).sum();
        Ok(Self { grid, values, mass })
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n], mass: 0.0 }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Outer edge of the last cell with positive value (0 for the empty profile).
    pub fn support_radius(&self) -> f64 {
        match self.values.iter().rposition(|&v| v > 0.0) {
            Some(i) => self.grid.edges()[i + 1],
            None => 0.0,
        }
    }

    /// Cells with a value strictly between 0 and 1.
    pub fn fractional_cells(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0 && v < 1.0).count()
    }

    /// Mass of the profile inside the shell `a < |x| < b`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        (0..self.grid.len())
            .filter(|&i| self.values[i] != 0.0)
            .map(|i| self.values[i] * self.grid.cell_overlap(i, a, b))
            .sum()
    }

    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(FlockError::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.grid.volumes())
            .map(|((a, b), w)| (a - b).abs() * w)
            .sum())
    }

    /// `‖ρ - 1_{B_R}‖₁` for the origin-centred ball of radius `radius`.
    pub fn l1_to_ball(&self, radius: f64) -> f64 {
        let g = &self.grid;
        (0..g.len())
            .map(|i| {
                let inside = g.cell_overlap(i, 0.0, radius);
                let outside = g.volumes()[i] - inside;
                (1.0 - self.values[i]) * inside + self.values[i] * outside.max(0.0)
            })
            .sum()
    }

    /// Conservative transfer onto another grid: each new cell gets the
    /// volume average of the old profile over it. Exact when `grid` refines
    /// the current grid.
    pub fn on_grid(&self, grid: &RadialGrid) -> Result<Self> {
        if grid == &self.grid {
            return Ok(self.clone());
        }
        if grid.dim() != self.grid.dim() {
            return Err(FlockError::GridMismatch);
        }
        let old = self.grid.edges();
        let mut values = vec![0.0; grid.len()];
        for (j, v) in values.iter_mut().enumerate() {
            let (a, b) = (grid.edges()[j], grid.edges()[j + 1]);
            let first = self.grid.cell_of(a);
            if b <= old[first + 1] && a >= old[first] {
                *v = self.values[first];
                continue;
            }
            let mut acc = 0.0;
            let mut i = first;
            while i < self.grid.len() && old[i] < b {
                acc += self.values[i] * shell_volume(grid.dim(), a.max(old[i]), b.min(old[i + 1]));
                i += 1;
            }
            *v = (acc / grid.volumes()[j]).clamp(0.0, 1.0);
        }
        Self::new(grid.clone(), values)
    }

    /// Columnar text form: `# N alpha lambda mass`, then `r_left r_right value` rows.
    pub fn to_text(&self, params: &KernelParams, provenance: &[String]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {} {} {} {}", params.dim, params.alpha, params.lambda, self.mass);
        for line in provenance {
            let _ = writeln!(out, "# {line}");
        }
        let e = self.grid.edges();
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{} {} {}", e[i], e[i + 1], v);
        }
        out
    }

    /// Inverse of [`RadialProfile::to_text`]. The mass in the header is
    /// checked against the rows.
    pub fn from_text(text: &str) -> Result<(KernelParams, Self)> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| FlockError::Parse("empty profile".into()))?;
        let fields: Vec<&str> = header
            .strip_prefix('#')
            .ok_or_else(|| FlockError::Parse("missing '# N alpha lambda mass' header".into()))?
            .split_whitespace()
            .collect();
        if fields.len() != 4 {
            return Err(FlockError::Parse(format!("header has {} fields, expected 4", fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| FlockError::Parse(format!("{s:?}: {e}")));
        let dim = fields[0]
            .parse::<usize>()
            .map_err(|e| FlockError::Parse(format!("dimension {:?}: {e}", fields[0])))?;
        let params = KernelParams::new(dim, num(fields[1])?, num(fields[2])?)?;
        let mass = num(fields[3])?;
        let mut edges = vec![0.0];
        let mut values = Vec::new();
        for line in lines {
            if line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 3 {
                return Err(FlockError::Parse(format!("row {line:?} needs 3 columns")));
            }
            let (a, b, v) = (num(cols[0])?, num(cols[1])?, num(cols[2])?);
            if a != *edges.last().unwrap() {
                return Err(FlockError::Parse(format!("row starting at {a} is not contiguous")));
            }
            edges.push(b);
            values.push(v);
        }
        let grid = RadialGrid::from_edges(dim, edges)?;
        let profile = Self::new(grid, values)?;
        if (profile.mass - mass).abs() > 1e-12 * mass.abs().max(1.0) {
            return Err(FlockError::Parse(format!(
                "header mass {mass} disagrees with rows ({})",
                profile.mass
            )));
        }
        Ok((params, profile))
    }
}

/// Origin-centred ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub dim: usize,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(FlockError::Domain(format!("ball radius {radius} must be > 0")));
        }
        Ok(Self { dim, radius })
    }

    /// The ball `E*` of volume `mass`.
    pub fn with_volume(dim: usize, mass: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(FlockError::ZeroMass);
        }
        Self::new(dim, ball_radius_for_volume(dim, mass))
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.dim, self.radius)
    }
}

/// Shapes confined to the shell `(1-θ)R < r < (1+θ)R` that keep the mass of
/// the ball of radius `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShellPattern {
    /// Remove `{(1-θ)R < r < R}` and put the same mass just outside `R`.
    OuterShift,
    /// Remove `{(1-θ)R < r < (1-θ/2)R}` and put the same mass just outside `R`.
    InnerSliver,
    /// Linear decrease from 1 at `(1-θ)R` to 0 at the radius fixing the mass.
    Ramp,
    /// Value ½ from `(1-θ)R` to the radius fixing the mass.
    Half,
}

impl ShellPattern {
    pub const ALL: [ShellPattern; 4] = [
        ShellPattern::OuterShift,
        ShellPattern::InnerSliver,
        ShellPattern::Ramp,
        ShellPattern::Half,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    ShellPerturbedBall { radius: f64, theta: f64, pattern: ShellPattern },
    Custom(Vec<f64>),
}

/// Radial piece of a profile: `value + slope (r - start)` on `[start, end)`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    start: f64,
    end: f64,
    value: f64,
    slope: f64,
}

impl Piece {
    fn constant(start: f64, end: f64, value: f64) -> Self {
        Self { start, end, value, slope: 0.0 }
    }

    /// `|S^{N-1}| ∫_a^b (value + slope (r - start)) r^{N-1} dr`.
    fn integral(&self, dim: usize, a: f64, b: f64) -> f64 {
        if self.slope == 0.0 {
            return self.value * shell_volume(dim, a, b);
        }
        let n = dim as f64;
        let c0 = self.value - self.slope * self.start;
        let m0 = shell_volume(dim, a, b);
        let m1 = sphere_area(dim) * (b.powf(n + 1.0) - a.powf(n + 1.0)) / (n + 1.0);
        c0 * m0 + self.slope * m1
    }
}

fn profile_from_pieces(grid: &RadialGrid, pieces: &[Piece]) -> Result<RadialProfile> {
    for p in pieces {
        grid.check_radius(p.end)?;
    }
    let e = grid.edges();
    let mut values = vec![0.0; grid.len()];
    for p in pieces.iter().filter(|p| p.end > p.start) {
        let first = grid.cell_of(p.start);
        for i in first..grid.len() {
            let (a, b) = (e[i], e[i + 1]);
            if a >= p.end {
                break;
            }
            let (x, y) = (a.max(p.start), b.min(p.end));
            if y <= x {
                continue;
            }
            if p.slope == 0.0 && x == a && y == b {
                values[i] += p.value;
            } else {
                values[i] += p.integral(grid.dim(), x, y) / grid.volumes()[i];
            }
        }
    }
    for v in &mut values {
        *v = v.clamp(0.0, 1.0);
    }
    RadialProfile::new(grid.clone(), values)
}

/// Radius `r'` with `vol(R, r') = vol((1-θ)R, (1-θ+w)R)` style balance:
/// solves `r'^N = R^N + removed` for a removed volume fraction of `|B_1|`.
fn outer_radius_for(dim: usize, radius: f64, removed_volume: f64) -> f64 {
    let n = dim as f64;
    (radius.powf(n) + removed_volume * n / sphere_area(dim)).powf(1.0 / n)
}

/// Bisection for the end `b` of a piece starting at `a` whose mass grows
/// monotonically with `b`.
fn solve_end<F: Fn(f64) -> f64>(mass_of: F, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass_of(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn shell_pieces(dim: usize, radius: f64, theta: f64, pattern: ShellPattern) -> Result<Vec<Piece>> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(FlockError::ThetaOutOfRange(theta));
    }
    let inner = (1.0 - theta) * radius;
    if theta == 0.0 {
        return Ok(vec![Piece::constant(0.0, radius, 1.0)]);
    }
    let shell_mass = shell_volume(dim, inner, radius);
    let pieces = match pattern {
        ShellPattern::OuterShift => {
            let r2 = outer_radius_for(dim, radius, shell_mass);
            vec![Piece::constant(0.0, inner, 1.0), Piece::constant(radius, r2, 1.0)]
        }
        ShellPattern::InnerSliver => {
            let mid = (1.0 - 0.5 * theta) * radius;
            let r2 = outer_radius_for(dim, radius, shell_volume(dim, inner, mid));
            vec![
                Piece::constant(0.0, inner, 1.0),
                Piece::constant(mid, radius, 1.0),
                Piece::constant(radius, r2, 1.0),
            ]
        }
        ShellPattern::Ramp => {
            let ramp = |b: f64| Piece { start: inner, end: b, value: 1.0, slope: -1.0 / (b - inner) };
            let b = solve_end(
                |b| ramp(b).integral(dim, inner, b),
                shell_mass,
                radius,
                (1.0 + theta) * radius,
            );
            vec![Piece::constant(0.0, inner, 1.0), ramp(b)]
        }
        ShellPattern::Half => {
            let n = dim as f64;
            let b = (inner.powf(n) + 2.0 * (radius.powf(n) - inner.powf(n))).powf(1.0 / n);
            vec![Piece::constant(0.0, inner, 1.0), Piece::constant(inner, b, 0.5)]
        }
    };
    let outer = pieces.iter().map(|p| p.end).fold(0.0, f64::max);
    if outer > (1.0 + theta) * radius * (1.0 + 1e-12) {
        return Err(FlockError::PatternViolatesShell(format!(
            "{pattern:?} reaches {outer} beyond (1+θ)R = {}",
            (1.0 + theta) * radius
        )));
    }
    Ok(pieces)
}

/// Radii where the profile of `kind` has jumps or kinks; useful as grid
/// breakpoints.
pub fn profile_breakpoints(kind: &ProfileKind, dim: usize) -> Result<Vec<f64>> {
    Ok(match kind {
        ProfileKind::Ball { radius } => vec![*radius],
        ProfileKind::Annulus { inner, outer } => vec![*inner, *outer],
        ProfileKind::ShellPerturbedBall { radius, theta, pattern } => {
            let mut v: Vec<f64> = shell_pieces(dim, *radius, *theta, *pattern)?
                .iter()
                .flat_map(|p| [p.start, p.end])
                .collect();
            v.push(*radius);
            v
        }
        ProfileKind::Custom(_) => vec![],
    })
}

/// Cell-averaged profile of the given shape. Cells cut by a discontinuity get
/// the exact volume fraction.
pub fn make_profile(kind: &ProfileKind, grid: &RadialGrid) -> Result<RadialProfile> {
    match kind {
        ProfileKind::Ball { radius } => {
            if !(*radius > 0.0) {
                return Err(FlockError::Domain(format!("ball radius {radius} must be > 0")));
            }
            profile_from_pieces(grid, &[Piece::constant(0.0, *radius, 1.0)])
        }
        ProfileKind::Annulus { inner, outer } => {
            if !(*inner >= 0.0 && inner < outer) {
                return Err(FlockError::Domain(format!("annulus needs 0 <= a < b (got {inner}, {outer})")));
            }
            profile_from_pieces(grid, &[Piece::constant(*inner, *outer, 1.0)])
        }
        ProfileKind::ShellPerturbedBall { radius, theta, pattern } => {
            profile_from_pieces(grid, &shell_pieces(grid.dim(), *radius, *theta, *pattern)?)
        }
        ProfileKind::Custom(values) => RadialProfile::new(grid.clone(), values.clone()),
    }
}

/// Outer radius `b` of the annulus `(a, b)` with the volume of `B_R`.
pub fn equal_mass_annulus_outer(dim: usize, radius: f64, inner: f64) -> f64 {
    let n = dim as f64;
    (radius.powf(n) + inner.powf(n)).powf(1.0 / n)
}

/// Minimizer of `∫ρψ` over `0 ≤ ρ ≤ 1`, `∫ρ = target_mass`: fill cells in
/// increasing order of `psi`, ties broken innermost first. Returns the
/// profile and the level (the `psi` value of the last cell touched).
pub fn bathtub_fill(psi: &[f64], target_mass: f64, grid: &RadialGrid) -> Result<(RadialProfile, f64)> {
    if psi.len() != grid.len() {
        return Err(FlockError::GridMismatch);
    }
    let capacity = grid.capacity();
    if !(target_mass >= 0.0) || target_mass > capacity {
        return Err(FlockError::InfeasibleMass { mass: target_mass, capacity });
    }
    let mut order: Vec<usize> = (0..psi.len()).collect();
    order.sort_by(|&a, &b| psi[a].total_cmp(&psi[b]).then(a.cmp(&b)));
    let vol = grid.volumes();
    let mut values = vec![0.0; psi.len()];
    let mut remaining = target_mass;
    let mut level = psi[order[0]];
    for &i in &order {
        if remaining <= 0.0 {
            break;
        }
        level = psi[i];
        if remaining >= vol[i] {
            values[i] = 1.0;
            remaining -= vol[i];
        } else {
            values[i] = remaining / vol[i];
            remaining = 0.0;
        }
    }
    Ok((RadialProfile::new(grid.clone(), values)?, level))
}

/// Fraction of the sphere `|x| = r` lying inside the ball of radius `radius`
/// centred at distance `shift` from the origin.
pub fn cap_fraction(dim: usize, r: f64, shift: f64, radius: f64) -> f64 {
    if shift == 0.0 || r == 0.0 {
        return if r.max(shift) < radius { 1.0 } else { 0.0 };
    }
    if r + shift <= radius {
        return 1.0;
    }
    if r >= radius + shift || r <= shift - radius {
        return 0.0;
    }
    let c0 = ((r * r + shift * shift - radius * radius) / (2.0 * r * shift)).clamp(-1.0, 1.0);
    match dim {
        1 => 0.5 * ((c0 < 1.0) as u8 as f64 + (c0 < -1.0) as u8 as f64),
        2 => c0.acos() / std::f64::consts::PI,
        3 => 0.5 * (1.0 - c0),
        _ => {
            let half = 0.5 * statrs::function::beta::beta_reg(0.5 * (dim as f64 - 1.0), 0.5, 1.0 - c0 * c0);
            if c0 >= 0.0 {
                half
            } else {
                1.0 - half
            }
        }
    }
}

/// `∫ ρ(x) 1_{|x - a| < R} dx` with `|a| = shift`.
pub fn overlap_with_shifted_ball(rho: &RadialProfile, ball: &BallSpec, shift: f64) -> f64 {
    let g = rho.grid();
    let radius = ball.radius;
    if shift == 0.0 {
        return rho.mass_between(0.0, radius);
    }
    let dim = g.dim();
    let area = sphere_area(dim);
    let e = g.edges();
    let full_to = (radius - shift).max(0.0);
    let cut_from = (shift - radius).max(0.0);
    let cut_to = radius + shift;
    let gl = rule(8);
    let mut total = 0.0;
    for (i, &v) in rho.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let (a, b) = (e[i], e[i + 1]);
        let mut acc = g.cell_overlap(i, 0.0, full_to);
        let (x, y) = (a.max(cut_from).max(full_to), b.min(cut_to));
        if y > x {
            let f = |r: f64| cap_fraction(dim, r, shift, radius) * r.powi(dim as i32 - 1);
            acc += area
                * if dim == 3 {
                    gl.integrate(x, y, f)
                } else {
                    graded_both(f, x, y, 12, gl)
                };
        }
        total += v * acc;
    }
    total
}

/// `A[ρ] = 1 - max_a overlap(ρ, E* + a) / m` and the maximizing shift.
pub fn asymmetry(rho: &RadialProfile) -> Result<(f64, f64)> {
    let m = rho.mass();
    if !(m > 0.0) {
        return Err(FlockError::ZeroMass);
    }
    let ball = BallSpec::with_volume(rho.grid().dim(), m)?;
    let radius = ball.radius;
    let f = |s: f64| overlap_with_shifted_ball(rho, &ball, s);
    let hi = rho.support_radius() + radius;
    const SCAN: usize = 64;
    let samples: Vec<(f64, f64)> = (0..SCAN)
        .map(|k| {
            let s = hi * k as f64 / (SCAN - 1) as f64;
            (s, f(s))
        })
        .collect();
    let mut best = 0;
    for k in 1..SCAN {
        if samples[k].1 > samples[best].1 {
            best = k;
        }
    }
    let (mut shift, mut value) = samples[best];
    // golden section on the bracket around the best sample
    let lo = samples[best.saturating_sub(1)].0;
    let up = samples[(best + 1).min(SCAN - 1)].0;
    let (mut a, mut b) = (lo, up);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-6 * radius {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    for (s, v) in [(c, fc), (d, fd)] {
        if v > value {
            shift = s;
            value = v;
        }
    }
    let a_val = (1.0 - value / m).clamp(0.0, 1.0);
    Ok((a_val, shift))
}

/// Construction that moves mass of `rho` into the shell
/// `(1-θ)R ≤ |x| ≤ (1+θ)R` around the origin-centred ball `ball` of equal
/// volume: the result is 1 inside `r_i`, equal to `rho` on `(r_i, r_o]` and 0
/// beyond `r_o`, with one of the cut radii equal to `(1∓θ)R` and the other
/// fixed by mass conservation.
///
/// The result lives on `rho`'s grid refined at `(1-θ)R`, `R`, `(1+θ)R` and at
/// the cut radius, so every property holds cell by cell.
pub fn competitor(rho: &RadialProfile, theta: f64, ball: &BallSpec) -> Result<RadialProfile> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(FlockError::ThetaOutOfRange(theta));
    }
    let m = rho.mass();
    let vol = ball.volume();
    if (m - vol).abs() > 1e-10 * vol {
        return Err(FlockError::MassMismatch { mass: m, ball: vol });
    }
    let radius = ball.radius;
    let (r_in, r_out) = ((1.0 - theta) * radius, (1.0 + theta) * radius);
    let grid = rho.grid().refine_at(&[r_in, radius, r_out])?;
    let (r_in, radius, r_out) = (grid.snap(r_in), grid.snap(radius), grid.snap(r_out));
    let rho = rho.on_grid(&grid)?;
    let dim = grid.dim();
    let e = grid.edges();
    let vals = rho.values();
    let vols = grid.volumes();
    let nc = grid.len();
    let r_max = grid.r_max();

    let m_i: f64 = (0..nc).filter(|&i| e[i + 1] <= r_in).map(|i| (1.0 - vals[i]) * vols[i]).sum();
    let m_o: f64 = (0..nc).filter(|&i| e[i] >= r_out).map(|i| vals[i] * vols[i]).sum();
    if m_i == 0.0 && m_o == 0.0 {
        return Ok(rho);
    }

    let n = dim as f64;
    let area_n = sphere_area(dim) / n;
    let (cut_in, cut_out) = if m_i >= m_o {
        // ∫_{r > r_o} ρ = m_i, searched from the outside
        let mut tail = 0.0;
        let mut r_o = r_in;
        for i in (0..nc).rev() {
            let piece = vals[i] * vols[i];
            if piece > 0.0 && tail + piece >= m_i {
                let need = (m_i - tail) / vals[i];
                let x = (e[i + 1].powf(n) - need / area_n).max(0.0).powf(1.0 / n);
                r_o = x.clamp(e[i], e[i + 1]);
                break;
            }
            tail += piece;
        }
        (r_in, r_o.clamp(radius.min(r_max), r_out.min(r_max)))
    } else {
        // ∫_{r < r_i} (1 - ρ) = m_o, searched from the inside
        let mut head = 0.0;
        let mut r_i = r_out;
        for i in 0..nc {
            let piece = (1.0 - vals[i]) * vols[i];
            if piece > 0.0 && head + piece >= m_o {
                let need = (m_o - head) / (1.0 - vals[i]);
                let x = (e[i].powf(n) + need / area_n).powf(1.0 / n);
                r_i = x.clamp(e[i], e[i + 1]);
                break;
            }
            head += piece;
        }
        (r_i.clamp(r_in, radius), r_out)
    };

    let grid = grid.refine_at(&[cut_in, cut_out])?;
    let (cut_in, cut_out) = (grid.snap(cut_in), grid.snap(cut_out));
    let rho = rho.on_grid(&grid)?;
    let e = grid.edges();
    let values: Vec<f64> = rho
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if e[i + 1] <= cut_in {
                1.0
            } else if e[i] >= cut_out {
                0.0
            } else {
                v
            }
        })
        .collect();
    RadialProfile::new(grid, values)
}

/// Measured competitor properties on the common (refined) grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompetitorProperties {
    /// `|m(ρ̃) - m(ρ)| / m(ρ)`.
    pub mass_rel_err: f64,
    /// `1_{(1-θ)B} ≤ ρ̃ ≤ 1_{(1+θ)B}` cell by cell.
    pub confined: bool,
    /// `ρ̃ ≥ ρ` in `B` and `ρ̃ ≤ ρ` outside, cell by cell.
    pub ordered: bool,
    pub l1_before: f64,
    pub l1_after: f64,
    /// `∫ |ρ̃ - ρ|` over `(1-θ)B ∪ (R^N \ (1+θ)B)`.
    pub change_outside_shell: f64,
    pub change_total: f64,
}

impl CompetitorProperties {
    pub fn all_hold(&self, mass_tol: f64, slack: f64) -> bool {
        self.mass_rel_err <= mass_tol
            && self.confined
            && self.ordered
            && self.l1_after <= self.l1_before + slack
            && self.change_outside_shell + slack >= 0.5 * self.change_total
    }
}

pub fn competitor_properties(
    rho: &RadialProfile,
    tilde: &RadialProfile,
    theta: f64,
    ball: &BallSpec,
) -> Result<CompetitorProperties> {
    let radius = ball.radius;
    let (r_in, r_out) = ((1.0 - theta) * radius, (1.0 + theta) * radius);
    let grid = tilde.grid().refine_at(&[r_in, radius, r_out])?;
    let (r_in, radius, r_out) = (grid.snap(r_in), grid.snap(radius), grid.snap(r_out));
    let tilde = tilde.on_grid(&grid)?;
    let rho_c = rho.on_grid(&grid)?;
    let e = grid.edges();
    let (a, b) = (rho_c.values(), tilde.values());
    let mut confined = true;
    let mut ordered = true;
    let mut outside = 0.0;
    let mut total = 0.0;
    for i in 0..grid.len() {
        if e[i + 1] <= r_in && b[i] != 1.0 {
            confined = false;
        }
        if e[i] >= r_out && b[i] != 0.0 {
            confined = false;
        }
        if e[i + 1] <= radius {
            ordered &= b[i] >= a[i];
        } else {
            ordered &= b[i] <= a[i];
        }
        let d = (b[i] - a[i]).abs() * grid.volumes()[i];
        total += d;
        if e[i + 1] <= r_in || e[i] >= r_out {
            outside += d;
        }
    }
    Ok(CompetitorProperties {
        mass_rel_err: (tilde.mass() - rho.mass()).abs() / rho.mass(),
        confined,
        ordered,
        l1_before: rho_c.l1_to_ball(radius),
        l1_after: tilde.l1_to_ball(radius),
        change_outside_shell: outside,
        change_total: total,
    })
}

#[cfg(test)]
mod tests;
