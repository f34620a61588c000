//! The Swendsen-Wang Markov chain: a bond step that occupies satisfied
//! edges independently with probability `1 - exp(-beta |J_e|)`, and a spin
//! step that resamples one fair sign per occupied-edge cluster, propagating
//! `sign(J_e)` along occupied edges.
//!
//! Draw-order contract (what makes seeded trajectories reproducible): the
//! bond step consumes exactly one uniform draw per satisfied edge, in
//! canonical edge order; the spin step consumes one uniform draw per
//! cluster, in order of each cluster's smallest vertex, and that draw is the
//! smallest vertex's new spin. Neutral edges (J_e = 0) are never occupied
//! and consume no draw.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Result, SwError};
use crate::model::{GibbsModel, SpinConfig};

/// One occupation bit per canonical edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondConfig {
    occupied: Vec<bool>,
}

impl BondConfig {
    pub fn empty(edge_count: usize) -> Self {
        Self { occupied: vec![false; edge_count] }
    }

    pub fn from_bits(occupied: Vec<bool>) -> Self {
        Self { occupied }
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn occupied(&self, e: u32) -> bool {
        self.occupied[e as usize]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&b| b).count()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.occupied
    }
}

/// Union-find over vertices carrying the relative spin sign to the
/// component root, so that cluster membership and the forced sign pattern
/// come out of one pass over the occupied edges.
#[derive(Debug, Clone)]
pub(crate) struct SignedUnionFind {
    parent: Vec<u32>,
    sign: Vec<i8>,
    size: Vec<u32>,
}

impl SignedUnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), sign: vec![1; n], size: vec![1; n] }
    }

    pub(crate) fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        self.sign.fill(1);
        self.size.fill(1);
    }

    /// Root of `v` and the sign of `v` relative to that root.
    pub(crate) fn find(&mut self, v: u32) -> (u32, i8) {
        let mut r = v;
        let mut s = 1i8;
        while self.parent[r as usize] != r {
            s *= self.sign[r as usize];
            r = self.parent[r as usize];
        }
        // Compress the path, rebasing every sign directly onto the root.
        let mut c = v;
        let mut sc = s;
        while self.parent[c as usize] != c {
            let p = self.parent[c as usize];
            let sp = sc * self.sign[c as usize];
            self.parent[c as usize] = r;
            self.sign[c as usize] = sc;
            c = p;
            sc = sp;
        }
        (r, s)
    }

    /// Merge the components of `x` and `y` under the constraint
    /// `sigma_x * sigma_y = rel`. A cycle that contradicts an existing
    /// constraint is an internal-consistency error: the bond step only
    /// occupies edges the current spins satisfy, so it cannot produce one.
    pub(crate) fn union(&mut self, x: u32, y: u32, rel: i8) -> Result<()> {
        let (rx, sx) = self.find(x);
        let (ry, sy) = self.find(y);
        if rx == ry {
            if sx * sy != rel {
                return Err(SwError::Internal(format!(
                    "sign contradiction closing a cycle at vertices {x}, {y}"
                )));
            }
            return Ok(());
        }
        let t = sx * sy * rel;
        let (big, small) = if self.size[rx as usize] >= self.size[ry as usize] {
            (rx, ry)
        } else {
            (ry, rx)
        };
        self.parent[small as usize] = big;
        self.sign[small as usize] = t;
        self.size[big as usize] += self.size[small as usize];
        Ok(())
    }
}

/// Documented stream-derivation rule for parallel replicas:
/// `replica_seed = mix(base_seed ^ mix(stream))` with the SplitMix64
/// finalizer as `mix`. Distinct streams give unrelated generators.
pub fn derive_replica_seed(base_seed: u64, stream: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(base_seed ^ mix(stream))
}

/// One Swendsen-Wang chain. Strictly sequential; parallelism belongs across
/// chains with seeds from [`derive_replica_seed`].
pub struct SwChain {
    model: GibbsModel,
    sigma: SpinConfig,
    eta: BondConfig,
    time: u64,
    rng: ChaCha12Rng,
    bond_prob: Vec<f64>,
    uf: SignedUnionFind,
    root_spin: Vec<i8>,
    root_seen: Vec<bool>,
}

impl SwChain {
    /// Chain with the initial spins sampled uniformly from the seeded
    /// stream (consumes one draw per vertex before any sweep).
    pub fn new(model: GibbsModel, seed: u64) -> Self {
        let n = model.lattice().vertex_count();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let sigma = SpinConfig::random(n, &mut rng);
        Self::with_rng(model, sigma, rng)
    }

    /// Chain started from explicit spins.
    pub fn from_spins(model: GibbsModel, sigma: SpinConfig, seed: u64) -> Result<Self> {
        if sigma.len() != model.lattice().vertex_count() {
            return Err(SwError::Shape(format!(
                "{} spins for {} vertices",
                sigma.len(),
                model.lattice().vertex_count()
            )));
        }
        Ok(Self::with_rng(model, sigma, ChaCha12Rng::seed_from_u64(seed)))
    }

    fn with_rng(model: GibbsModel, sigma: SpinConfig, rng: ChaCha12Rng) -> Self {
        let n = model.lattice().vertex_count();
        let m = model.lattice().edge_count();
        let beta = model.beta();
        let bond_prob = model
            .field()
            .couplings()
            .iter()
            .map(|&j| 1.0 - (-beta * j.abs()).exp())
            .collect();
        Self {
            model,
            sigma,
            eta: BondConfig::empty(m),
            time: 0,
            rng,
            bond_prob,
            uf: SignedUnionFind::new(n),
            root_spin: vec![1; n],
            root_seen: vec![false; n],
        }
    }

    pub fn model(&self) -> &GibbsModel {
        &self.model
    }

    pub fn sigma(&self) -> &SpinConfig {
        &self.sigma
    }

    pub fn bonds(&self) -> &BondConfig {
        &self.eta
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// Replace the bond configuration (mainly for driving the spin step on
    /// hand-built bonds in analyses and tests).
    pub fn set_bonds(&mut self, bonds: BondConfig) -> Result<()> {
        if bonds.len() != self.eta.len() {
            return Err(SwError::Shape(format!(
                "{} bond bits for {} edges",
                bonds.len(),
                self.eta.len()
            )));
        }
        self.eta = bonds;
        Ok(())
    }

    /// Bond update: occupy each satisfied edge independently with its
    /// probability, clear everything else.
    pub fn bond_step(&mut self) {
        let edges = self.model.lattice().edges();
        let couplings = self.model.field().couplings();
        for (e, &[a, b]) in edges.iter().enumerate() {
            let j = couplings[e];
            let satisfied = j * f64::from(self.sigma.get(a) * self.sigma.get(b)) > 0.0;
            self.eta.occupied[e] = satisfied && self.rng.random::<f64>() < self.bond_prob[e];
        }
    }

    /// Spin update: resample one fair sign per occupied-edge cluster
    /// (isolated vertices are singleton clusters) and force the rest of
    /// each cluster through `sigma_y = sigma_x * sign(J_e)`.
    pub fn spin_step(&mut self) -> Result<()> {
        let edges = self.model.lattice().edges();
        let couplings = self.model.field().couplings();
        self.uf.reset();
        for (e, &[a, b]) in edges.iter().enumerate() {
            if self.eta.occupied[e] {
                let rel: i8 = if couplings[e] > 0.0 { 1 } else { -1 };
                self.uf.union(a, b, rel)?;
            }
        }
        self.root_seen.fill(false);
        let n = self.sigma.len() as u32;
        for v in 0..n {
            let (r, s) = self.uf.find(v);
            if !self.root_seen[r as usize] {
                self.root_seen[r as usize] = true;
                let draw: i8 = if self.rng.random::<f64>() < 0.5 { 1 } else { -1 };
                // First vertex scanned in a cluster is its smallest; make the
                // draw land on it directly.
                self.root_spin[r as usize] = draw * s;
            }
            self.sigma.set(v, self.root_spin[r as usize] * s);
        }
        Ok(())
    }

    /// One full step of the spin-marginal kernel: bond step then spin step.
    pub fn sweep(&mut self) -> Result<()> {
        self.bond_step();
        self.spin_step()?;
        self.time += 1;
        Ok(())
    }
}

/// A named scalar function of the chain state, recorded once per sweep.
pub struct SwObserver {
    name: String,
    func: Box<dyn Fn(&SwChain) -> Result<f64> + Send + Sync>,
}

impl SwObserver {
    pub fn new(
        name: impl Into<String>,
        func: impl Fn(&SwChain) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), func: Box::new(func) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

/// Per-observer scalar series, one value per recorded sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRecord {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl SeriesRecord {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }
}

/// Advance `burn_in + sweeps` steps, recording every observer after each of
/// the final `sweeps` steps.
pub fn run(
    chain: &mut SwChain,
    sweeps: u64,
    burn_in: u64,
    observers: &[SwObserver],
) -> Result<SeriesRecord> {
    for _ in 0..burn_in {
        chain.sweep()?;
    }
    let mut columns: Vec<Vec<f64>> = observers
        .iter()
        .map(|_| Vec::with_capacity(sweeps as usize))
        .collect();
    for t in 0..sweeps {
        chain.sweep()?;
        for (obs, col) in observers.iter().zip(&mut columns) {
            match (obs.func)(chain) {
                Ok(v) => col.push(v),
                Err(e) => {
                    return Err(SwError::Observer {
                        name: obs.name.clone(),
                        step: t,
                        source: Box::new(e),
                    })
                }
            }
        }
    }
    Ok(SeriesRecord {
        names: observers.iter().map(|o| o.name.clone()).collect(),
        columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_couplings, CouplingDistribution, CouplingField, DisorderSpec};
    use crate::lattice::LatticeBox;
    use crate::model::classify_edge;
    use crate::model::EdgeStatus;

    fn two_vertex_chain(j: f64, beta: f64, seed: u64) -> SwChain {
        let lattice = LatticeBox::at_origin(1, 2).unwrap();
        let model = GibbsModel::new(CouplingField::constant(lattice, j), beta).unwrap();
        SwChain::new(model, seed)
    }

    fn frustrated_chain(beta: f64, seed: u64) -> SwChain {
        let lattice = LatticeBox::at_origin(2, 2).unwrap();
        let field = CouplingField::new(lattice, vec![1.0, 1.0, 1.0, -1.0]).unwrap();
        SwChain::new(GibbsModel::new(field, beta).unwrap(), seed)
    }

    #[test]
    fn infinite_temperature_never_occupies_bonds() {
        let mut chain = frustrated_chain(0.0, 1);
        for _ in 0..100 {
            chain.sweep().unwrap();
            assert_eq!(chain.bonds().occupied_count(), 0);
        }
    }

    #[test]
    fn occupied_edges_are_always_satisfied_before_and_after() {
        let lattice = LatticeBox::at_origin(2, 4).unwrap();
        let spec = DisorderSpec { distribution: CouplingDistribution::Uniform, seed: 17 };
        let field = sample_couplings(&lattice, &spec).unwrap();
        let model = GibbsModel::new(field.clone(), 1.5).unwrap();
        let mut chain = SwChain::new(model, 2);
        for _ in 0..2000 {
            chain.bond_step();
            for e in 0..field.lattice().edge_count() as u32 {
                if chain.bonds().occupied(e) {
                    assert_eq!(classify_edge(&field, e, chain.sigma()), EdgeStatus::Satisfied);
                }
            }
            chain.spin_step().unwrap();
            for e in 0..field.lattice().edge_count() as u32 {
                if chain.bonds().occupied(e) {
                    assert_eq!(classify_edge(&field, e, chain.sigma()), EdgeStatus::Satisfied);
                }
            }
        }
    }

    #[test]
    fn bond_probability_is_half_at_beta_ln2() {
        let mut chain = two_vertex_chain(1.0, 2.0_f64.ln(), 3);
        // Hold the spins aligned and repeat the bond step alone.
        let aligned = SpinConfig::all_plus(2);
        chain.sigma = aligned;
        let trials = 100_000;
        let mut occupied = 0u64;
        for _ in 0..trials {
            chain.bond_step();
            if chain.bonds().occupied(0) {
                occupied += 1;
            }
        }
        let freq = occupied as f64 / trials as f64;
        let se = 0.5 / (trials as f64).sqrt();
        assert!((freq - 0.5).abs() < 4.0 * se, "freq {freq}");
    }

    #[test]
    fn occupied_positive_edge_aligns_spins_and_negative_opposes() {
        for (j, expected_product) in [(0.7, 1i8), (-0.7, -1i8)] {
            let lattice = LatticeBox::at_origin(1, 2).unwrap();
            let model =
                GibbsModel::new(CouplingField::constant(lattice, j), 1.0).unwrap();
            let mut chain = SwChain::new(model, 5);
            for _ in 0..200 {
                chain.set_bonds(BondConfig::from_bits(vec![true])).unwrap();
                chain.spin_step().unwrap();
                assert_eq!(chain.sigma().get(0) * chain.sigma().get(1), expected_product);
            }
        }
    }

    #[test]
    fn independent_spins_at_infinite_temperature() {
        let lattice = LatticeBox::at_origin(2, 3).unwrap();
        let model = GibbsModel::new(CouplingField::constant(lattice, 0.5), 0.0).unwrap();
        let mut chain = SwChain::new(model, 7);
        let sweeps = 40_000;
        let mut sums = vec![0i64; 9];
        for _ in 0..sweeps {
            chain.sweep().unwrap();
            for v in 0..9 {
                sums[v] += chain.sigma().get(v as u32) as i64;
            }
        }
        let bound = 4.0 / (sweeps as f64).sqrt();
        for (v, s) in sums.iter().enumerate() {
            let mean = *s as f64 / sweeps as f64;
            assert!(mean.abs() < bound, "vertex {v}: mean {mean}");
        }
    }

    #[test]
    fn fixed_seed_reproduces_the_trajectory() {
        let make = || frustrated_chain(1.0, 99);
        let mut a = make();
        let mut b = make();
        for _ in 0..500 {
            a.sweep().unwrap();
            b.sweep().unwrap();
            assert_eq!(a.sigma(), b.sigma());
            assert_eq!(a.bonds(), b.bonds());
        }
        assert_eq!(a.time(), 500);
    }

    #[test]
    fn replica_seeds_differ_across_streams_and_bases() {
        let s: Vec<u64> = (0..64).map(|i| derive_replica_seed(42, i)).collect();
        let mut dedup = s.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), s.len());
        assert_ne!(derive_replica_seed(42, 0), derive_replica_seed(43, 0));
    }

    #[test]
    fn run_collects_one_value_per_observer_per_sweep() {
        let mut chain = frustrated_chain(0.5, 11);
        let observers = vec![
            SwObserver::new("energy", |c: &SwChain| c.model().hamiltonian(c.sigma())),
            SwObserver::new("m0", |c: &SwChain| Ok(f64::from(c.sigma().get(0)))),
        ];
        let rec = run(&mut chain, 250, 10, &observers).unwrap();
        assert_eq!(rec.rows(), 250);
        assert_eq!(rec.names, vec!["energy", "m0"]);
        assert_eq!(rec.column("energy").unwrap().len(), 250);

        let mut chain2 = frustrated_chain(0.5, 11);
        let empty = run(&mut chain2, 0, 0, &observers).unwrap();
        assert_eq!(empty.rows(), 0);
    }

    #[test]
    fn ferromagnet_at_large_beta_sits_at_its_ground_energy() {
        let lattice = LatticeBox::at_origin(2, 3).unwrap();
        let model = GibbsModel::new(CouplingField::constant(lattice, 1.0), 12.0).unwrap();
        let mut chain = SwChain::new(model, 4);
        let observers =
            vec![SwObserver::new("energy", |c: &SwChain| c.model().hamiltonian(c.sigma()))];
        let rec = run(&mut chain, 300, 100, &observers).unwrap();
        // Ground energy of the 3x3 ferromagnet with unit couplings: all 12
        // edges satisfied.
        let energy = rec.column("energy").unwrap();
        assert!(energy.iter().all(|&e| e == -12.0));
    }
}
