//! The quenched Ising model on a box: Hamiltonian, exact Gibbs weights on
//! tiny boxes, satisfied/unsatisfied/neutral edges, constant-sign spin
//! clusters, their boundary surfaces, and the gadget reflection map.

use rand::Rng;

use crate::disorder::{CouplingField, GadgetParams};
use crate::error::{Result, SwError};
use crate::lattice::{edge_boundary, EdgeId, EdgeRegion, LatticeBox, VertexId, VertexRegion};

/// Hard cap on exact state enumeration: 2^16 states.
pub const GIBBS_ENUMERATION_CAP: usize = 16;

/// One spin in {-1, +1} per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfig {
    spins: Vec<i8>,
}

impl SpinConfig {
    pub fn all_plus(n: usize) -> Self {
        Self { spins: vec![1; n] }
    }

    pub fn from_signs(spins: Vec<i8>) -> Result<Self> {
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(SwError::Parameter("spins must be +1 or -1".into()));
        }
        Ok(Self { spins })
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let spins = (0..n)
            .map(|_| if rng.random::<f64>() < 0.5 { 1 } else { -1 })
            .collect();
        Self { spins }
    }

    /// Bit v of `state` is `(sigma_v + 1) / 2`.
    pub fn from_state_index(n: usize, state: u64) -> Self {
        let spins = (0..n)
            .map(|v| if (state >> v) & 1 == 1 { 1 } else { -1 })
            .collect();
        Self { spins }
    }

    pub fn state_index(&self) -> u64 {
        self.spins
            .iter()
            .enumerate()
            .fold(0u64, |acc, (v, &s)| if s > 0 { acc | (1 << v) } else { acc })
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn get(&self, v: VertexId) -> i8 {
        self.spins[v as usize]
    }

    pub fn set(&mut self, v: VertexId, s: i8) {
        debug_assert!(s == 1 || s == -1);
        self.spins[v as usize] = s;
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.spins
    }

    pub fn flipped(&self) -> Self {
        Self { spins: self.spins.iter().map(|&s| -s).collect() }
    }

    pub fn flip_region(&mut self, region: &VertexRegion) {
        for v in region.iter() {
            self.spins[v as usize] = -self.spins[v as usize];
        }
    }
}

/// A coupling field together with the inverse temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsModel {
    field: CouplingField,
    beta: f64,
}

impl GibbsModel {
    pub fn new(field: CouplingField, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(SwError::Parameter(format!(
                "beta must be finite and >= 0, got {beta}"
            )));
        }
        Ok(Self { field, beta })
    }

    pub fn field(&self) -> &CouplingField {
        &self.field
    }

    pub fn lattice(&self) -> &LatticeBox {
        self.field.lattice()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `-sum_e J_e sigma_x sigma_y` over all box edges (free boundary).
    pub fn hamiltonian(&self, sigma: &SpinConfig) -> Result<f64> {
        if sigma.len() != self.lattice().vertex_count() {
            return Err(SwError::Shape(format!(
                "{} spins for {} vertices",
                sigma.len(),
                self.lattice().vertex_count()
            )));
        }
        let mut h = 0.0;
        for (e, &[a, b]) in self.lattice().edges().iter().enumerate() {
            h -= self.field.coupling(e as EdgeId) * f64::from(sigma.get(a) * sigma.get(b));
        }
        Ok(h)
    }

    /// Log of the unnormalized stationary weight, `(beta/2) * sum_e J_e
    /// sigma_x sigma_y`.
    ///
    /// The factor 1/2 pairs with the bond rule that occupies satisfied edges
    /// with probability `1 - exp(-beta |J_e|)`: detailed balance for the
    /// sweep kernel holds exactly for this weight. A weight without the 1/2
    /// would instead pair with occupation probability `1 - exp(-2 beta |J_e|)`.
    pub fn log_weight(&self, sigma: &SpinConfig) -> Result<f64> {
        Ok(-0.5 * self.beta * self.hamiltonian(sigma)?)
    }

    /// Exact stationary distribution over all `2^|V|` states, indexed by
    /// [`SpinConfig::state_index`]. Normalization is done in the log domain.
    pub fn exact_gibbs(&self) -> Result<Vec<f64>> {
        self.exact_gibbs_with_cap(GIBBS_ENUMERATION_CAP)
    }

    pub fn exact_gibbs_with_cap(&self, cap: usize) -> Result<Vec<f64>> {
        let nv = self.lattice().vertex_count();
        if nv > cap {
            return Err(SwError::Capacity(format!(
                "{nv} vertices exceed the enumeration cap of {cap}"
            )));
        }
        let n = 1usize << nv;
        let mut logw = Vec::with_capacity(n);
        for state in 0..n as u64 {
            let sigma = SpinConfig::from_state_index(nv, state);
            logw.push(self.log_weight(&sigma)?);
        }
        let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut pi: Vec<f64> = logw.iter().map(|&w| (w - max).exp()).collect();
        let z: f64 = pi.iter().sum();
        for p in &mut pi {
            *p /= z;
        }
        Ok(pi)
    }
}

/// `-sum_{e in edges} J_e sigma_x sigma_y`: the energy contribution of an
/// edge set.
pub fn hamiltonian_on_edges(field: &CouplingField, edges: &EdgeRegion, sigma: &SpinConfig) -> f64 {
    let lattice = field.lattice();
    let mut h = 0.0;
    for e in edges.iter() {
        let [a, b] = lattice.edge_endpoints(e);
        h -= field.coupling(e) * f64::from(sigma.get(a) * sigma.get(b));
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeStatus {
    Satisfied,
    Unsatisfied,
    Neutral,
}

/// Sign of `J_e sigma_x sigma_y`.
pub fn classify_edge(field: &CouplingField, e: EdgeId, sigma: &SpinConfig) -> EdgeStatus {
    let [a, b] = field.lattice().edge_endpoints(e);
    let v = field.coupling(e) * f64::from(sigma.get(a) * sigma.get(b));
    if v > 0.0 {
        EdgeStatus::Satisfied
    } else if v < 0.0 {
        EdgeStatus::Unsatisfied
    } else {
        EdgeStatus::Neutral
    }
}

/// Maximal connected constant-sign components, ordered by smallest vertex.
pub fn spin_clusters(lattice: &LatticeBox, sigma: &SpinConfig) -> Vec<VertexRegion> {
    let n = lattice.vertex_count();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(parent: &mut [u32], v: u32) -> u32 {
        let mut r = v;
        while parent[r as usize] != r {
            r = parent[r as usize];
        }
        let mut c = v;
        while parent[c as usize] != r {
            let next = parent[c as usize];
            parent[c as usize] = r;
            c = next;
        }
        r
    }
    for &[a, b] in lattice.edges() {
        if sigma.get(a) == sigma.get(b) {
            let ra = find(&mut parent, a);
            let rb = find(&mut parent, b);
            if ra != rb {
                parent[rb as usize] = ra;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<u32, Vec<VertexId>> = Default::default();
    for v in 0..n as u32 {
        let r = find(&mut parent, v);
        groups.entry(r).or_default().push(v);
    }
    let mut clusters: Vec<VertexRegion> =
        groups.into_values().map(VertexRegion::new).collect();
    clusters.sort_by_key(|c| c.as_slice()[0]);
    clusters
}

/// The edge boundary of a constant-sign cluster.
pub fn peierls_surface(lattice: &LatticeBox, cluster: &VertexRegion) -> EdgeRegion {
    edge_boundary(lattice, cluster)
}

/// The reflection map attached to a gadget placement: spins inside `B_2l`
/// are reflected and negated, spins in `B_4l \ B_2l` are reflected, spins
/// outside `B_4l` are untouched. An involution.
pub fn phi_map(
    lattice: &LatticeBox,
    params: &GadgetParams,
    sigma: &SpinConfig,
) -> Result<SpinConfig> {
    let outer = params.outer_cube();
    let inner = params.inner_cube();
    if !outer.is_inside(lattice) {
        return Err(SwError::Placement(format!(
            "gadget cube (center {:?}, side {}) does not fit inside the lattice",
            params.center,
            4 * params.l
        )));
    }
    let mut out = sigma.clone();
    for v in 0..lattice.vertex_count() as VertexId {
        let p = lattice.vertex_coords(v);
        if inner.contains_point(&p) {
            let rv = outer.reflect_vertex(lattice, v)?;
            out.set(v, -sigma.get(rv));
        } else if outer.contains_point(&p) {
            let rv = outer.reflect_vertex(lattice, v)?;
            out.set(v, sigma.get(rv));
        }
    }
    Ok(out)
}
