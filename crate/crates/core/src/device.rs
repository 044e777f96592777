//! Device parameters, derived couplings, and the Hamiltonians of the
//! qutrit-coupled two-resonator system.
//!
//! Every user-facing frequency is an ordinary frequency ν = ω/2π (GHz for
//! resonator/qutrit frequencies and detunings, MHz for couplings), and decay
//! rates are given per microsecond. Internally time is in nanoseconds and
//! frequencies are angular, in rad/ns. The conversion happens only in
//! [`DeviceParams::angular`].

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{
    annihilation, creation, identity, number, qutrit_op, CMatrix, HilbertSpace, Level, QOperator,
    Term, C64,
};

pub const TWO_PI: f64 = 2.0 * PI;

/// GHz → rad/ns.
pub fn ghz_to_angular(ghz: f64) -> f64 {
    TWO_PI * ghz
}

/// MHz → rad/ns.
pub fn mhz_to_angular(mhz: f64) -> f64 {
    TWO_PI * mhz * 1e-3
}

/// Resonator quality factor `Q = 2πν·T` for ν in GHz and decay time in μs.
pub fn quality_factor(omega_ghz: f64, decay_time_us: f64) -> f64 {
    TWO_PI * omega_ghz * 1e9 * decay_time_us * 1e-6
}

/// Decay and dephasing rates in 1/μs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub gamma_eg: f64,
    pub gamma_fe: f64,
    pub gamma_fg: f64,
    pub gamma_phi_e: f64,
    pub gamma_phi_f: f64,
}

impl DecayRates {
    pub fn none() -> Self {
        Self::default()
    }

    /// Rates from a qutrit time scale `γ` and resonator lifetime `η` (both μs):
    /// `1/γ_eg = 3γ`, `1/γ_fe = 2γ`, `1/γ_fg = 10γ`, `1/γ_φ = γ`, `1/κ = η`.
    pub fn from_times(gamma_us: f64, eta_us: f64) -> Self {
        Self {
            kappa_a: 1.0 / eta_us,
            kappa_b: 1.0 / eta_us,
            gamma_eg: 1.0 / (3.0 * gamma_us),
            gamma_fe: 1.0 / (2.0 * gamma_us),
            gamma_fg: 1.0 / (10.0 * gamma_us),
            gamma_phi_e: 1.0 / gamma_us,
            gamma_phi_f: 1.0 / gamma_us,
        }
    }

    fn all(&self) -> [(&'static str, f64); 7] {
        [
            ("kappa_a", self.kappa_a),
            ("kappa_b", self.kappa_b),
            ("gamma_eg", self.gamma_eg),
            ("gamma_fe", self.gamma_fe),
            ("gamma_fg", self.gamma_fg),
            ("gamma_phi_e", self.gamma_phi_e),
            ("gamma_phi_f", self.gamma_phi_f),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub omega_a_ghz: f64,
    pub omega_b_ghz: f64,
    /// `ω_eg − ω_a`, negative.
    pub delta_a_ghz: f64,
    /// `ω_fe − ω_b`, positive and larger than `|δ_a|`.
    pub delta_b_ghz: f64,
    pub g_mhz: f64,
    pub mu_mhz: f64,
    /// Direct resonator-resonator crosstalk coupling.
    pub g_ab_mhz: f64,
    /// Phase-matching index of the gate protocol.
    pub k: u32,
    pub rates: DecayRates,
}

/// Angular-frequency (rad/ns) and per-ns view of [`DeviceParams`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngularParams {
    pub g: f64,
    pub mu: f64,
    pub g_ab: f64,
    pub delta_a: f64,
    pub delta_b: f64,
    pub delta_ab: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub gamma_eg: f64,
    pub gamma_fe: f64,
    pub gamma_fg: f64,
    pub gamma_phi_e: f64,
    pub gamma_phi_f: f64,
}

impl DeviceParams {
    pub fn omega_eg_ghz(&self) -> f64 {
        self.omega_a_ghz + self.delta_a_ghz
    }

    pub fn omega_fe_ghz(&self) -> f64 {
        self.omega_b_ghz + self.delta_b_ghz
    }

    /// `Δ_ab = ω_a − ω_b`.
    pub fn delta_ab_ghz(&self) -> f64 {
        self.omega_a_ghz - self.omega_b_ghz
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega_a_ghz,
            self.omega_b_ghz,
            self.delta_a_ghz,
            self.delta_b_ghz,
            self.g_mhz,
            self.mu_mhz,
            self.g_ab_mhz,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if self.delta_a_ghz >= 0.0 {
            return Err(Error::InvalidParams(format!(
                "delta_a must be negative, got {} GHz",
                self.delta_a_ghz
            )));
        }
        if self.delta_b_ghz <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "delta_b must be positive, got {} GHz",
                self.delta_b_ghz
            )));
        }
        if self.delta_b_ghz <= self.delta_a_ghz.abs() {
            return Err(Error::InvalidParams(format!(
                "delta_b ({} GHz) must exceed |delta_a| ({} GHz)",
                self.delta_b_ghz,
                self.delta_a_ghz.abs()
            )));
        }
        if self.g_mhz < 0.0 || self.mu_mhz < 0.0 || self.g_ab_mhz < 0.0 {
            return Err(Error::InvalidParams("couplings must be non-negative".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidParams("k must be a positive integer".into()));
        }
        for (name, rate) in self.rates.all() {
            if !(rate >= 0.0) || !rate.is_finite() {
                return Err(Error::InvalidParams(format!("rate {name} = {rate} is not a finite non-negative number")));
            }
        }
        Ok(())
    }

    pub fn angular(&self) -> AngularParams {
        let per_ns = |r: f64| r * 1e-3;
        AngularParams {
            g: mhz_to_angular(self.g_mhz),
            mu: mhz_to_angular(self.mu_mhz),
            g_ab: mhz_to_angular(self.g_ab_mhz),
            delta_a: ghz_to_angular(self.delta_a_ghz),
            delta_b: ghz_to_angular(self.delta_b_ghz),
            delta_ab: ghz_to_angular(self.delta_ab_ghz()),
            kappa_a: per_ns(self.rates.kappa_a),
            kappa_b: per_ns(self.rates.kappa_b),
            gamma_eg: per_ns(self.rates.gamma_eg),
            gamma_fe: per_ns(self.rates.gamma_fe),
            gamma_fg: per_ns(self.rates.gamma_fg),
            gamma_phi_e: per_ns(self.rates.gamma_phi_e),
            gamma_phi_f: per_ns(self.rates.gamma_phi_f),
        }
    }
}

// ---------------------------------------------------------------------------
// Derived quantities

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RegimeWarning {
    /// `|δ_a|/g` below 5.
    WeakDispersiveA { ratio: f64 },
    /// `δ_b/μ` below 5.
    WeakDispersiveB { ratio: f64 },
    /// `Δ / max(g²/|δ_a|, μ²/δ_b, λ)` below 1.
    SmallRamanDetuning { ratio: f64 },
    /// g or μ is zero, so there is no cross-Kerr coupling.
    Decoupled,
}

impl fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegimeWarning::WeakDispersiveA { ratio } => {
                write!(f, "|delta_a|/g = {ratio:.3} < 5: resonator a is only weakly dispersive")
            }
            RegimeWarning::WeakDispersiveB { ratio } => {
                write!(f, "delta_b/mu = {ratio:.3} < 5: resonator b is only weakly dispersive")
            }
            RegimeWarning::SmallRamanDetuning { ratio } => write!(
                f,
                "Delta/max(g^2/|delta_a|, mu^2/delta_b, lambda) = {ratio:.3} < 1: second elimination step is not justified"
            ),
            RegimeWarning::Decoupled => write!(f, "g or mu is zero: the resonators are decoupled"),
        }
    }
}

/// Couplings derived from [`DeviceParams`], in ordinary-frequency units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Effective two-photon coupling `(gμ/2)(1/|δ_a| + 1/δ_b)`.
    pub lambda_mhz: f64,
    /// `δ_b − |δ_a|`.
    pub big_delta_ghz: f64,
    /// Cross-Kerr coefficient `λ²/Δ`.
    pub chi_mhz: f64,
    /// `χ + g²/δ_a`.
    pub theta_mhz: f64,
    /// `π/|θ|` (angular θ).
    pub t_gate_ns: f64,
    /// `π/χ` (angular χ); infinite when χ = 0.
    pub t_cat_ns: f64,
    pub warnings: Vec<RegimeWarning>,
}

pub fn derive(params: &DeviceParams) -> Result<DerivedParams> {
    let da = params.delta_a_ghz.abs() * 1e3;
    let db = params.delta_b_ghz * 1e3;
    let big_delta = db - da;
    if !(big_delta > 0.0) {
        return Err(Error::InvalidParams(format!(
            "Delta = delta_b - |delta_a| = {big_delta} MHz must be positive"
        )));
    }
    let g = params.g_mhz;
    let mu = params.mu_mhz;
    let lambda = 0.5 * g * mu * (1.0 / da + 1.0 / db);
    let chi = lambda * lambda / big_delta;
    let stark_a = g * g / (params.delta_a_ghz * 1e3);
    let theta = chi + stark_a;
    // ν-convention: π/|2πθ| = 1/(2|θ|); θ in MHz gives μs, so scale to ns.
    let t_gate_ns = 1e3 / (2.0 * theta.abs());
    let t_cat_ns = 1e3 / (2.0 * chi);

    let mut warnings = Vec::new();
    if g == 0.0 || mu == 0.0 {
        warnings.push(RegimeWarning::Decoupled);
    }
    if g > 0.0 && da / g < 5.0 {
        warnings.push(RegimeWarning::WeakDispersiveA { ratio: da / g });
    }
    if mu > 0.0 && db / mu < 5.0 {
        warnings.push(RegimeWarning::WeakDispersiveB { ratio: db / mu });
    }
    let scale = (g * g / da).max(mu * mu / db).max(lambda);
    if scale > 0.0 && big_delta / scale < 1.0 {
        warnings.push(RegimeWarning::SmallRamanDetuning {
            ratio: big_delta / scale,
        });
    }

    Ok(DerivedParams {
        lambda_mhz: lambda,
        big_delta_ghz: big_delta * 1e-3,
        chi_mhz: chi,
        theta_mhz: theta,
        t_gate_ns,
        t_cat_ns,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSolution {
    pub lambda_mhz: f64,
    pub mu_mhz: f64,
    pub t_gate_ns: f64,
}

/// Couplings that make `(g²/|δ_a|)·t = 2kπ` and `|θ|·t = π` hold together.
///
/// `g` in MHz, detunings in GHz. Every quantity is homogeneous of degree one
/// in frequency, so the ordinary-frequency convention carries through; the
/// gate time is `2kπ|δ_a|/g²` with angular frequencies, i.e. `k|δ_a|/g²` in ν.
pub fn solve_gate_parameters(g_mhz: f64, delta_a_ghz: f64, delta_b_ghz: f64, k: u32) -> Result<GateSolution> {
    let da = delta_a_ghz.abs();
    let db = delta_b_ghz;
    if !(da > 0.0) {
        return Err(Error::InvalidParams("delta_a must be nonzero".into()));
    }
    if !(db > da) {
        return Err(Error::InvalidParams(format!(
            "delta_b ({db} GHz) must exceed |delta_a| ({da} GHz)"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParams("k must be a positive integer".into()));
    }
    if !(g_mhz > 0.0) {
        return Err(Error::InvalidParams("g must be positive".into()));
    }
    let kf = k as f64;
    let root = ((db - da) * (2.0 * kf - 1.0) / (2.0 * kf * da)).sqrt();
    let lambda_mhz = g_mhz * root;
    let mu_mhz = 2.0 * da * db / (da + db) * root * 1e3;
    let g_ghz = g_mhz * 1e-3;
    let t_gate_ns = kf * da / (g_ghz * g_ghz);
    Ok(GateSolution {
        lambda_mhz,
        mu_mhz,
        t_gate_ns,
    })
}

// ---------------------------------------------------------------------------
// Hamiltonians

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HamiltonianKind {
    /// Qutrit couples a on g↔e and b on e↔f, interaction picture.
    Full,
    /// [`HamiltonianKind::Full`] plus direct a–b crosstalk.
    FullCrosstalk,
    /// First elimination: Stark shifts plus the two-photon λ exchange g↔f.
    Effective3,
    /// Second elimination: Stark shifts plus cross-Kerr on g and f.
    Effective4,
    /// Effective4 restricted to g: linear shift of a plus cross-Kerr.
    GroundEffective,
    /// Pure cross-Kerr `−χ n_a n_b |g⟩⟨g|`.
    CrossKerr,
    /// Time-independent equivalent of [`HamiltonianKind::FullCrosstalk`].
    RotatingFrame,
}

impl HamiltonianKind {
    pub fn is_time_dependent(self) -> bool {
        matches!(
            self,
            HamiltonianKind::Full | HamiltonianKind::FullCrosstalk | HamiltonianKind::Effective3
        )
    }

    /// Kinds whose matrix is diagonal in the product basis.
    pub fn is_diagonal(self) -> bool {
        matches!(
            self,
            HamiltonianKind::Effective4 | HamiltonianKind::GroundEffective | HamiltonianKind::CrossKerr
        )
    }
}

impl fmt::Display for HamiltonianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            HamiltonianKind::Full => "full",
            HamiltonianKind::FullCrosstalk => "full+crosstalk",
            HamiltonianKind::Effective3 => "effective3",
            HamiltonianKind::Effective4 => "effective4",
            HamiltonianKind::GroundEffective => "ground-effective",
            HamiltonianKind::CrossKerr => "cross-kerr",
            HamiltonianKind::RotatingFrame => "rotating-frame",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub kind: HamiltonianKind,
    pub params: DeviceParams,
    pub space: HilbertSpace,
}

impl HamiltonianSpec {
    pub fn new(kind: HamiltonianKind, params: DeviceParams, space: HilbertSpace) -> Result<Self> {
        params.validate()?;
        Ok(Self { kind, params, space })
    }
}

/// A term `T·e^{iωt}` of a time-dependent operator (ω = 0 for static terms).
#[derive(Clone, Debug, PartialEq)]
pub struct OscillatingTerm {
    pub term: Term,
    /// Angular frequency in rad/ns.
    pub frequency: f64,
}

/// `H(t) = Σ_k T_k e^{iω_k t}`, kept in structured form.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeDependentOperator {
    space: HilbertSpace,
    terms: Vec<OscillatingTerm>,
}

impl TimeDependentOperator {
    pub fn new(space: HilbertSpace, terms: Vec<OscillatingTerm>) -> Result<Self> {
        QOperator::structured(space, terms.iter().map(|t| t.term.clone()).collect())?;
        Ok(Self { space, terms })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn terms(&self) -> &[OscillatingTerm] {
        &self.terms
    }

    pub fn at(&self, t: f64) -> QOperator {
        let terms = self
            .terms
            .iter()
            .map(|o| o.term.scaled(C64::from_polar(1.0, o.frequency * t)))
            .collect();
        QOperator::structured(self.space, terms).expect("terms validated at construction")
    }

    /// Largest angular frequency (rad/ns) driving the dynamics: oscillation
    /// frequencies, static diagonal entries, and a row-sum bound on the
    /// off-diagonal couplings.
    pub fn max_frequency(&self) -> f64 {
        let n = self.space.total();
        let mut diag = vec![0.0f64; n];
        let mut offdiag = vec![0.0f64; n];
        let mut fmax: f64 = 0.0;
        for o in &self.terms {
            fmax = fmax.max(o.frequency.abs());
            let map = o
                .term
                .monomial(&self.space)
                .map(|m| m.entries().to_vec())
                .unwrap_or_else(|| {
                    let d = o.term.to_dense();
                    let mut e = Vec::new();
                    for j in 0..n {
                        for i in 0..n {
                            if d[(i, j)] != C64::new(0.0, 0.0) {
                                e.push(crate::operator::MapEntry {
                                    row: i,
                                    col: j,
                                    weight: d[(i, j)],
                                });
                            }
                        }
                    }
                    e
                });
            for e in map {
                if e.row == e.col && o.frequency == 0.0 {
                    diag[e.row] += e.weight.re;
                } else {
                    offdiag[e.row] += e.weight.norm();
                }
            }
        }
        for i in 0..n {
            fmax = fmax.max(diag[i].abs()).max(offdiag[i]);
        }
        fmax
    }
}

fn ladder_ops(space: &HilbertSpace) -> (CMatrix, CMatrix, CMatrix, CMatrix) {
    (
        annihilation(space.dim_a()).expect("validated dim"),
        creation(space.dim_a()).expect("validated dim"),
        annihilation(space.dim_b()).expect("validated dim"),
        creation(space.dim_b()).expect("validated dim"),
    )
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn osc(coeff: f64, q: CMatrix, a: CMatrix, b: CMatrix, frequency: f64) -> OscillatingTerm {
    OscillatingTerm {
        term: Term::new(real(coeff), q, a, b),
        frequency,
    }
}

fn coupling_terms(spec: &HamiltonianSpec, crosstalk: bool) -> Vec<OscillatingTerm> {
    let p = spec.params.angular();
    let s = &spec.space;
    let (a, ad, b, bd) = ladder_ops(s);
    let (ia, ib) = (identity(s.dim_a()), identity(s.dim_b()));
    let sigma_eg_up = qutrit_op(Level::E, Level::G);
    let sigma_fe_up = qutrit_op(Level::F, Level::E);
    let mut terms = vec![
        osc(p.g, sigma_eg_up.clone(), a.clone(), ib.clone(), p.delta_a),
        osc(p.g, sigma_eg_up.adjoint(), ad.clone(), ib.clone(), -p.delta_a),
        osc(p.mu, sigma_fe_up.clone(), ia.clone(), b.clone(), p.delta_b),
        osc(p.mu, sigma_fe_up.adjoint(), ia.clone(), bd.clone(), -p.delta_b),
    ];
    if crosstalk {
        terms.push(osc(p.g_ab, identity(3), a.clone(), bd.clone(), p.delta_ab));
        terms.push(osc(p.g_ab, identity(3), ad, b, -p.delta_ab));
    }
    terms
}

/// Stark-shift part common to the two effective Hamiltonians:
/// `−(g²/δ_a)(a†a|g⟩⟨g| − aa†|e⟩⟨e|) − (μ²/δ_b)(b†b|e⟩⟨e| − bb†|f⟩⟨f|)`.
fn stark_terms(spec: &HamiltonianSpec) -> Vec<OscillatingTerm> {
    let p = spec.params.angular();
    let s = &spec.space;
    let (a, ad, b, bd) = ladder_ops(s);
    let (ia, ib) = (identity(s.dim_a()), identity(s.dim_b()));
    let sa = p.g * p.g / p.delta_a;
    let sb = p.mu * p.mu / p.delta_b;
    let pg = qutrit_op(Level::G, Level::G);
    let pe = qutrit_op(Level::E, Level::E);
    let pf = qutrit_op(Level::F, Level::F);
    vec![
        osc(-sa, pg, &ad * &a, ib.clone(), 0.0),
        osc(sa, pe.clone(), &a * &ad, ib.clone(), 0.0),
        osc(-sb, pe, ia.clone(), &bd * &b, 0.0),
        osc(sb, pf, ia, &b * &bd, 0.0),
    ]
}

/// Structured `H(t)` for every time-dependent or static kind. The
/// rotating-frame kind yields its static Hamiltonian.
pub fn hamiltonian_terms(spec: &HamiltonianSpec) -> Result<TimeDependentOperator> {
    spec.params.validate()?;
    let s = &spec.space;
    let terms = match spec.kind {
        HamiltonianKind::Full => coupling_terms(spec, false),
        HamiltonianKind::FullCrosstalk => coupling_terms(spec, true),
        HamiltonianKind::RotatingFrame => {
            return Ok(build_rotating_frame(spec)?.static_operator().clone());
        }
        kind => {
            let d = derive(&spec.params)?;
            let lambda = mhz_to_angular(d.lambda_mhz);
            let chi = mhz_to_angular(d.chi_mhz);
            let big_delta = ghz_to_angular(d.big_delta_ghz);
            let p = spec.params.angular();
            let (a, ad, b, bd) = ladder_ops(s);
            let na = number(s.dim_a()).expect("validated dim");
            let nb = number(s.dim_b()).expect("validated dim");
            let pg = qutrit_op(Level::G, Level::G);
            match kind {
                HamiltonianKind::Effective3 => {
                    let mut t = stark_terms(spec);
                    let sigma_fg_down = qutrit_op(Level::G, Level::F);
                    t.push(osc(lambda, sigma_fg_down.clone(), ad.clone(), bd.clone(), -big_delta));
                    t.push(osc(lambda, sigma_fg_down.adjoint(), a.clone(), b.clone(), big_delta));
                    t
                }
                HamiltonianKind::Effective4 => {
                    let mut t = stark_terms(spec);
                    t.push(osc(chi, qutrit_op(Level::F, Level::F), &a * &ad, &b * &bd, 0.0));
                    t.push(osc(-chi, pg, &ad * &a, &bd * &b, 0.0));
                    t
                }
                HamiltonianKind::GroundEffective => vec![
                    osc(-p.g * p.g / p.delta_a, pg.clone(), na.clone(), identity(s.dim_b()), 0.0),
                    osc(-chi, pg, na, nb, 0.0),
                ],
                HamiltonianKind::CrossKerr => vec![osc(-chi, pg, na, nb, 0.0)],
                _ => unreachable!(),
            }
        }
    };
    TimeDependentOperator::new(*s, terms)
}

/// `H(t)` as a Hermitian structured operator.
pub fn build_hamiltonian(spec: &HamiltonianSpec, t: f64) -> Result<QOperator> {
    let mut h = hamiltonian_terms(spec)?.at(t);
    // Every kind is built from Hermitian-conjugate pairs or real diagonals.
    h = h.into_hermitian()?;
    Ok(h)
}

// ---------------------------------------------------------------------------
// Rotating frame

/// Diagonal frame `V(t) = exp(i·Φ·t)` with a separable phase
/// `Φ(q, n_a, n_b) = s_q + x·n_a + y·n_b + c`, together with the static
/// Hamiltonian `H_rot` such that `U_I(t) = V(t)·exp(−i·H_rot·t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RotatingFrame {
    space: HilbertSpace,
    level_phase: [f64; 3],
    photon_phase_a: f64,
    photon_phase_b: f64,
    offset: f64,
    h_rot: TimeDependentOperator,
}

impl RotatingFrame {
    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    /// Frame frequency of basis state `index`, rad/ns.
    pub fn phase_rate(&self, index: usize) -> f64 {
        let (q, na, nb) = self.space.labels(index);
        self.level_phase[q.index()]
            + self.photon_phase_a * na as f64
            + self.photon_phase_b * nb as f64
            + self.offset
    }

    pub fn phase_rates(&self) -> Vec<f64> {
        (0..self.space.total()).map(|i| self.phase_rate(i)).collect()
    }

    pub fn static_operator(&self) -> &TimeDependentOperator {
        &self.h_rot
    }

    pub fn hamiltonian(&self) -> QOperator {
        self.h_rot.at(0.0)
    }

    /// `V(t)` as a product of diagonal factors.
    pub fn frame_undo(&self, t: f64) -> QOperator {
        let diag = |d: usize, rate: f64| {
            CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                d,
                (0..d).map(|n| C64::from_polar(1.0, rate * n as f64 * t)),
            ))
        };
        let q = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            self.level_phase.iter().map(|s| C64::from_polar(1.0, s * t)),
        ));
        QOperator::product(
            self.space,
            C64::from_polar(1.0, self.offset * t),
            q,
            diag(self.space.dim_a(), self.photon_phase_a),
            diag(self.space.dim_b(), self.photon_phase_b),
        )
        .expect("factor shapes follow the space")
    }

    /// Maps rotating-frame amplitudes to the interaction picture in place.
    pub fn to_interaction_vector(&self, psi: &mut [C64], t: f64) {
        for (i, v) in psi.iter_mut().enumerate() {
            *v *= C64::from_polar(1.0, self.phase_rate(i) * t);
        }
    }

    /// `V(t) ρ V(t)†` in place.
    pub fn to_interaction_density(&self, rho: &mut CMatrix, t: f64) {
        let phases: Vec<C64> = (0..rho.nrows())
            .map(|i| C64::from_polar(1.0, self.phase_rate(i) * t))
            .collect();
        for j in 0..rho.ncols() {
            for i in 0..rho.nrows() {
                rho[(i, j)] *= phases[i] * phases[j].conj();
            }
        }
    }
}

/// Builds the static equivalent of a time-dependent Hamiltonian.
///
/// Phases are fixed by requiring `Φ_row − Φ_col = ω` on every oscillating
/// term; the remaining freedom (a multiple of the conserved excitation number
/// plus a constant) is used to minimise the spread of `Φ`.
pub fn build_rotating_frame(spec: &HamiltonianSpec) -> Result<RotatingFrame> {
    let kind = match spec.kind {
        HamiltonianKind::RotatingFrame => HamiltonianKind::FullCrosstalk,
        k => k,
    };
    let p = spec.params.angular();
    // Phases as a function of the free parameter c.
    let phases: Box<dyn Fn(f64) -> ([f64; 3], f64, f64)> = match kind {
        HamiltonianKind::Full => Box::new(move |c| {
            let (x, y) = (c, c);
            let se = p.delta_a + x;
            ([0.0, se, se + p.delta_b + y], x, y)
        }),
        HamiltonianKind::FullCrosstalk => Box::new(move |c| {
            let x = c;
            let y = c + p.delta_ab;
            let se = p.delta_a + x;
            ([0.0, se, se + p.delta_b + y], x, y)
        }),
        HamiltonianKind::Effective3 => {
            let d = derive(&spec.params)?;
            let big_delta = ghz_to_angular(d.big_delta_ghz);
            Box::new(move |c| ([0.0, c, 2.0 * c + big_delta], c, c))
        }
        other => return Err(Error::UnsupportedKind(other.to_string())),
    };
    let space = spec.space;
    let (da, db) = ((space.dim_a() - 1) as f64, (space.dim_b() - 1) as f64);
    let spread = |c: f64| {
        let (s, x, y) = phases(c);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for sq in s {
            for na in [0.0, da] {
                for nb in [0.0, db] {
                    let v = sq + x * na + y * nb;
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        (lo, hi)
    };
    // Spread is convex and piecewise linear in c.
    let bound = 10.0 * (p.delta_a.abs() + p.delta_b.abs() + p.delta_ab.abs() + 1.0);
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        let (a1, b1) = spread(m1);
        let (a2, b2) = spread(m2);
        if b1 - a1 <= b2 - a2 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let c = 0.5 * (lo + hi);
    let (level_phase, x, y) = phases(c);
    let (min, max) = spread(c);
    let offset = -0.5 * (min + max);

    let inner = HamiltonianSpec {
        kind,
        params: spec.params.clone(),
        space,
    };
    let td = hamiltonian_terms(&inner)?;
    let mut terms: Vec<OscillatingTerm> = td
        .terms()
        .iter()
        .map(|o| OscillatingTerm {
            term: o.term.clone(),
            frequency: 0.0,
        })
        .collect();
    let (ia, ib) = (identity(space.dim_a()), identity(space.dim_b()));
    let level_diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        3,
        level_phase.iter().map(|&s| real(s + offset)),
    ));
    terms.push(osc(1.0, level_diag, ia.clone(), ib.clone(), 0.0));
    terms.push(osc(x, identity(3), number(space.dim_a())?, ib, 0.0));
    terms.push(osc(y, identity(3), ia, number(space.dim_b())?, 0.0));

    // Check the frame against every oscillating term of the source.
    let frame = RotatingFrame {
        space,
        level_phase,
        photon_phase_a: x,
        photon_phase_b: y,
        offset,
        h_rot: TimeDependentOperator::new(space, terms)?,
    };
    for o in td.terms() {
        if let Some(map) = o.term.monomial(&space) {
            for e in map.entries() {
                let diff = frame.phase_rate(e.row) - frame.phase_rate(e.col);
                if (diff - o.frequency).abs() > 1e-9 * (1.0 + o.frequency.abs()) {
                    return Err(Error::UnsupportedKind(format!(
                        "{kind}: no separable frame matches all oscillation frequencies"
                    )));
                }
            }
        }
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::hermiticity_deviation;

    pub(crate) fn gate_point() -> DeviceParams {
        DeviceParams {
            omega_a_ghz: 3.5,
            omega_b_ghz: 6.5,
            delta_a_ghz: -0.3,
            delta_b_ghz: 0.7,
            g_mhz: 50.0,
            mu_mhz: 342.0,
            g_ab_mhz: 5.0,
            k: 1,
            rates: DecayRates::from_times(10.0, 20.0),
        }
    }

    #[test]
    fn chi_for_gate_point() {
        let d = derive(&gate_point()).unwrap();
        assert!((d.chi_mhz - 4.2).abs() / 4.2 < 0.02, "chi = {}", d.chi_mhz);
    }

    #[test]
    fn chi_for_cat_point() {
        let p = DeviceParams {
            delta_a_ghz: -1.0,
            delta_b_ghz: 1.696,
            g_mhz: 150.0,
            mu_mhz: 200.0,
            ..gate_point()
        };
        let d = derive(&p).unwrap();
        assert!((d.chi_mhz - 0.83).abs() / 0.83 < 0.02, "chi = {}", d.chi_mhz);
    }

    #[test]
    fn decoupled_limit() {
        let base = derive(&gate_point()).unwrap();
        let d = derive(&DeviceParams { mu_mhz: 0.0, ..gate_point() }).unwrap();
        assert_eq!(d.lambda_mhz, 0.0);
        assert_eq!(d.chi_mhz, 0.0);
        assert_eq!(d.big_delta_ghz, base.big_delta_ghz);
        assert!(d.warnings.contains(&RegimeWarning::Decoupled));
        assert!(d.t_cat_ns.is_infinite());
    }

    #[test]
    fn derive_rejects_nonpositive_raman_detuning() {
        let p = DeviceParams {
            delta_b_ghz: 0.3,
            ..gate_point()
        };
        assert!(derive(&p).is_err());
        assert!(p.validate().is_err());
    }

    #[test]
    fn warnings_flag_weak_dispersion() {
        let d = derive(&gate_point()).unwrap();
        assert!(d
            .warnings
            .iter()
            .any(|w| matches!(w, RegimeWarning::WeakDispersiveB { .. })));
        assert!(!d
            .warnings
            .iter()
            .any(|w| matches!(w, RegimeWarning::WeakDispersiveA { .. })));
    }

    #[test]
    fn gate_parameters_at_reference_point() {
        let s = solve_gate_parameters(50.0, -0.3, 0.7, 1).unwrap();
        assert!((s.mu_mhz - 342.0).abs() / 342.0 < 0.01, "mu = {}", s.mu_mhz);
        assert!((s.t_gate_ns - 120.0).abs() < 1e-9, "t = {}", s.t_gate_ns);
        assert!(solve_gate_parameters(50.0, -0.3, 0.3, 1).is_err());
        assert!(solve_gate_parameters(50.0, -0.3, 0.7, 0).is_err());
    }

    #[test]
    fn gate_parameters_large_k_limit() {
        let g = 50.0;
        let s = solve_gate_parameters(g, -0.3, 0.7, 1_000_000).unwrap();
        let limit = g * (0.4f64 / 0.3).sqrt();
        assert!((s.lambda_mhz - limit).abs() / limit < 1e-6);
    }

    #[test]
    fn quality_factors() {
        assert!((quality_factor(3.5, 20.0) - 4.4e5).abs() / 4.4e5 < 0.02);
        assert!((quality_factor(6.5, 20.0) - 8.2e5).abs() / 8.2e5 < 0.02);
        assert_eq!(quality_factor(3.5, 0.0), 0.0);
    }

    #[test]
    fn full_hamiltonian_matrix_element() {
        let s = HilbertSpace::new(3, 3).unwrap();
        let spec = HamiltonianSpec::new(HamiltonianKind::Full, gate_point(), s).unwrap();
        let g = mhz_to_angular(50.0);
        let h0 = build_hamiltonian(&spec, 0.0).unwrap().to_dense();
        let row = s.index(Level::E, 0, 0);
        let col = s.index(Level::G, 1, 0);
        assert!((h0[(row, col)] - C64::new(g, 0.0)).norm() < 1e-14);

        let da = ghz_to_angular(-0.3);
        for t in [0.37, 5.0, 17.25] {
            let ht = build_hamiltonian(&spec, t).unwrap().to_dense();
            let expected = C64::from_polar(g, da * t);
            assert!((ht[(row, col)] - expected).norm() < 1e-13);
        }
    }

    #[test]
    fn cross_kerr_diagonal() {
        let s = HilbertSpace::new(4, 4).unwrap();
        let spec = HamiltonianSpec::new(HamiltonianKind::CrossKerr, gate_point(), s).unwrap();
        let chi = mhz_to_angular(derive(&gate_point()).unwrap().chi_mhz);
        let h = build_hamiltonian(&spec, 0.0).unwrap().to_dense();
        for na in 0..4 {
            for nb in 0..4 {
                let i = s.index(Level::G, na, nb);
                assert!((h[(i, i)].re + chi * (na * nb) as f64).abs() < 1e-14);
                let j = s.index(Level::E, na, nb);
                assert_eq!(h[(j, j)], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn effective3_couples_g_and_f_only_through_two_photon_term() {
        let s = HilbertSpace::new(3, 3).unwrap();
        let spec = HamiltonianSpec::new(HamiltonianKind::Effective3, gate_point(), s).unwrap();
        let h = build_hamiltonian(&spec, 0.0).unwrap().to_dense();
        let lambda = mhz_to_angular(derive(&gate_point()).unwrap().lambda_mhz);
        for i in 0..s.total() {
            for j in 0..s.total() {
                if i == j || h[(i, j)].norm() == 0.0 {
                    continue;
                }
                let (qi, ai, bi) = s.labels(i);
                let (qj, aj, bj) = s.labels(j);
                let pair = (qi, qj);
                assert!(pair == (Level::G, Level::F) || pair == (Level::F, Level::G));
                if qi == Level::G {
                    assert_eq!((ai, bi), (aj + 1, bj + 1));
                    let amp = lambda * (((aj + 1) * (bj + 1)) as f64).sqrt();
                    assert!((h[(i, j)].norm() - amp).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn diagonal_kinds_are_diagonal() {
        let s = HilbertSpace::new(3, 4).unwrap();
        for kind in [
            HamiltonianKind::Effective4,
            HamiltonianKind::GroundEffective,
            HamiltonianKind::CrossKerr,
        ] {
            let spec = HamiltonianSpec::new(kind, gate_point(), s).unwrap();
            let h = build_hamiltonian(&spec, 1.0).unwrap().to_dense();
            for i in 0..s.total() {
                for j in 0..s.total() {
                    if i != j {
                        assert_eq!(h[(i, j)], C64::new(0.0, 0.0), "{kind}");
                    }
                }
            }
        }
    }

    #[test]
    fn every_kind_hermitian_at_random_times() {
        let s = HilbertSpace::new(3, 4).unwrap();
        let kinds = [
            HamiltonianKind::Full,
            HamiltonianKind::FullCrosstalk,
            HamiltonianKind::Effective3,
            HamiltonianKind::Effective4,
            HamiltonianKind::GroundEffective,
            HamiltonianKind::CrossKerr,
            HamiltonianKind::RotatingFrame,
        ];
        // Deterministic pseudo-random times over a few gate periods.
        let mut x: u64 = 0x9e3779b97f4a7c15;
        for kind in kinds {
            let spec = HamiltonianSpec::new(kind, gate_point(), s).unwrap();
            for _ in 0..20 {
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                let t = (x % 1_000_000) as f64 * 1e-3;
                let h = hamiltonian_terms(&spec).unwrap().at(t).to_dense();
                assert!(hermiticity_deviation(&h) <= 1e-12, "{kind} at t={t}");
            }
        }
    }

    #[test]
    fn rotating_frame_is_hermitian_and_rejects_static_kinds() {
        let s = HilbertSpace::new(4, 4).unwrap();
        let spec = HamiltonianSpec::new(HamiltonianKind::FullCrosstalk, gate_point(), s).unwrap();
        let frame = build_rotating_frame(&spec).unwrap();
        assert!(hermiticity_deviation(&frame.hamiltonian().to_dense()) < 1e-12);
        let bad = HamiltonianSpec::new(HamiltonianKind::CrossKerr, gate_point(), s).unwrap();
        assert!(matches!(build_rotating_frame(&bad), Err(Error::UnsupportedKind(_))));
    }

    #[test]
    fn uncoupled_rotating_frame_is_diagonal() {
        let s = HilbertSpace::new(3, 3).unwrap();
        let p = DeviceParams {
            g_mhz: 0.0,
            mu_mhz: 0.0,
            g_ab_mhz: 0.0,
            ..gate_point()
        };
        let spec = HamiltonianSpec::new(HamiltonianKind::FullCrosstalk, p, s).unwrap();
        let frame = build_rotating_frame(&spec).unwrap();
        let h = frame.hamiltonian().to_dense();
        for i in 0..s.total() {
            for j in 0..s.total() {
                if i != j {
                    assert_eq!(h[(i, j)].norm(), 0.0);
                }
            }
            assert!((h[(i, i)].re - frame.phase_rate(i)).abs() < 1e-12);
        }
    }
}
