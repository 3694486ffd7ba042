//! The four benchmark problems and the desk-scale preset.

use serde::{Deserialize, Serialize};

use crate::driver::FunctionalNoise;
use crate::error::{Error, Result};
use crate::forward::{CoefficientA, DirichletTrace, Nonlinearity, NonlinearityKind, Window};
use crate::mesh::Mesh;
use crate::objective::{BottomRingMode, ObjectiveSettings};
use crate::optimizer::AdamParams;
use crate::stochastic::BrownianVariance;
use crate::weights::CarlemanParams;

/// `10 exp(r/(r−1))` for `r < 1`, else 0, with `r = 16[(x − ½)² + ½(y − 1)²]`.
pub fn source_ex1(x: f64, y: f64) -> f64 {
    let r = 16.0 * ((x - 0.5).powi(2) + 0.5 * (y - 1.0).powi(2));
    if r < 1.0 {
        10.0 * (r / (r - 1.0)).exp()
    } else {
        0.0
    }
}

/// `sin(2π(x + y)) + sin(4π(x − y))`
pub fn source_ex2(x: f64, y: f64) -> f64 {
    use std::f64::consts::PI;
    (2.0 * PI * (x + y)).sin() + (4.0 * PI * (x - y)).sin()
}

/// Disc plus thin rectangle, value 7.
pub fn source_ex3(x: f64, y: f64) -> f64 {
    let disc = (x - 7.0 / 3.0).powi(2) + (y - 4.0).powi(2) < 1.0 / 40.0;
    let rect = f64::max(16.0 * (x - 14.0 / 5.0).abs(), 4.0 * (y - 3.5).abs()) < 1.0;
    if disc || rect {
        7.0
    } else {
        0.0
    }
}

/// Literal reading of the printed case analysis: 7 where
/// `(x − 5/2)² + (y − 7/2)² < 1/8` or `max{|x − 5/2|, |y − 7/2|} > 1/5`.
pub fn source_ex4(x: f64, y: f64) -> f64 {
    let disc = (x - 2.5).powi(2) + (y - 3.5).powi(2) < 1.0 / 8.0;
    let outside = f64::max((x - 2.5).abs(), (y - 3.5).abs()) > 0.2;
    if disc || outside {
        7.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Ex1,
    Ex2,
    Ex3,
    Ex4,
}

impl SourceKind {
    pub fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            SourceKind::Ex1 => source_ex1(x, y),
            SourceKind::Ex2 => source_ex2(x, y),
            SourceKind::Ex3 => source_ex3(x, y),
            SourceKind::Ex4 => source_ex4(x, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientKind {
    /// `10 x y t²`
    TenXyT2,
    /// `x² + y² + t²`
    SumOfSquares,
    Constant { value: f64 },
}

impl CoefficientKind {
    pub fn build(self) -> CoefficientA {
        match self {
            CoefficientKind::TenXyT2 => CoefficientA::from_fn(|t, x, y| 10.0 * x * y * t * t),
            CoefficientKind::SumOfSquares => CoefficientA::from_fn(|t, x, y| x * x + y * y + t * t),
            CoefficientKind::Constant { value } => CoefficientA::constant(value),
        }
    }
}

/// Mesh dimensions as written in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub m: usize,
    pub nx: usize,
    pub ny: usize,
    pub t_final: f64,
    pub lx: f64,
    pub ly: f64,
    #[serde(default)]
    pub ox: f64,
    #[serde(default)]
    pub oy: f64,
}

impl MeshSpec {
    pub fn build(&self) -> Result<Mesh> {
        Mesh::new(self.m, self.nx, self.ny, self.t_final, self.lx, self.ly, self.ox, self.oy)
    }

    pub const REFERENCE: MeshSpec = MeshSpec {
        m: 65,
        nx: 32,
        ny: 48,
        t_final: 1.0,
        lx: 1.0,
        ly: 1.5,
        ox: 0.0,
        oy: 0.0,
    };

    pub const ENLARGED: MeshSpec = MeshSpec {
        m: 65,
        nx: 60,
        ny: 240,
        t_final: 1.0,
        lx: 5.0,
        ly: 7.5,
        ox: 0.0,
        oy: 0.0,
    };
}

/// Every tunable of a reconstruction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparameters {
    pub carleman: CarlemanParams,
    pub kappa: f64,
    pub n_samples: usize,
    pub n_outer: usize,
    pub adam: AdamParams,
    /// Multiplicative noise level on both traces.
    pub delta: f64,
    pub n_forward_paths: usize,
    pub bottom_ring: BottomRingMode,
    pub paper_literal_volume: bool,
    pub functional_noise: FunctionalNoise,
    pub brownian_variance: BrownianVariance,
    /// Loss/error trace stride in Adam steps.
    pub trace_every: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            carleman: CarlemanParams::default(),
            kappa: 1e-4,
            n_samples: 30,
            n_outer: 5,
            adam: AdamParams::default(),
            delta: 0.1,
            n_forward_paths: 8,
            bottom_ring: BottomRingMode::Free,
            paper_literal_volume: false,
            functional_noise: FunctionalNoise::Resample,
            brownian_variance: BrownianVariance::Tau,
            trace_every: 50,
        }
    }
}

impl Hyperparameters {
    pub fn objective_settings(&self) -> ObjectiveSettings {
        ObjectiveSettings {
            carleman: self.carleman,
            kappa: self.kappa,
            bottom_ring: self.bottom_ring,
            paper_literal_volume: self.paper_literal_volume,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_samples == 0 {
            return bad("n_samples must be >= 1".into());
        }
        if self.n_outer == 0 {
            return bad("n_outer must be >= 1".into());
        }
        if self.n_forward_paths == 0 {
            return bad("n_forward_paths must be >= 1".into());
        }
        if !(self.kappa >= 0.0) {
            return bad(format!("kappa = {} must be >= 0", self.kappa));
        }
        if !(self.delta >= 0.0) {
            return bad(format!("delta = {} must be >= 0", self.delta));
        }
        if !(self.carleman.lambda > 0.0 && self.carleman.c0 > 0.0) {
            return bad("lambda and c0 must be positive".into());
        }
        if self.trace_every == 0 {
            return bad("trace_every must be >= 1".into());
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub id: String,
    pub source: SourceKind,
    pub coefficient: CoefficientKind,
    pub nonlinearity: NonlinearityKind,
    pub forward_mesh: MeshSpec,
    pub inverse_mesh: MeshSpec,
    /// Present when the forward problem runs on an enlarged domain.
    pub window: Option<Window>,
    pub hyper: Hyperparameters,
    pub reference_error: f64,
}

pub const EXPERIMENT_IDS: [&str; 5] = ["ex1", "ex2", "ex3", "ex4", "ex1-desk"];

const ENLARGED_WINDOW: Window = Window {
    t: (0.0, 1.0),
    x: (2.0, 3.0),
    y: (3.0, 4.5),
};

pub fn registry(id: &str) -> Result<ExperimentSpec> {
    let base = |id: &str, source, coefficient, nonlinearity, reference_error| ExperimentSpec {
        id: id.to_string(),
        source,
        coefficient,
        nonlinearity,
        forward_mesh: MeshSpec::REFERENCE,
        inverse_mesh: MeshSpec::REFERENCE,
        window: None,
        hyper: Hyperparameters::default(),
        reference_error,
    };
    let enlarged = |spec: ExperimentSpec| ExperimentSpec {
        forward_mesh: MeshSpec::ENLARGED,
        window: Some(ENLARGED_WINDOW),
        ..spec
    };
    Ok(match id {
        "ex1" => base("ex1", SourceKind::Ex1, CoefficientKind::TenXyT2, NonlinearityKind::SqrtGrad, 0.021),
        "ex2" => base(
            "ex2",
            SourceKind::Ex2,
            CoefficientKind::SumOfSquares,
            NonlinearityKind::ExpCapped { cap: 10.0 },
            0.06,
        ),
        "ex3" => enlarged(base("ex3", SourceKind::Ex3, CoefficientKind::TenXyT2, NonlinearityKind::SqrtGrad, 0.179)),
        "ex4" => enlarged(base("ex4", SourceKind::Ex4, CoefficientKind::TenXyT2, NonlinearityKind::SqrtGrad, 0.207)),
        "ex1-desk" => {
            let mut spec = registry("ex1")?;
            spec.id = "ex1-desk".into();
            spec.hyper.n_samples = 8;
            spec.hyper.n_outer = 3;
            spec.hyper.adam.steps = 3000;
            spec
        }
        other => return Err(Error::UnknownExperiment(other.to_string())),
    })
}

impl ExperimentSpec {
    pub fn forward_mesh(&self) -> Result<Mesh> {
        self.forward_mesh.build()
    }

    pub fn inverse_mesh(&self) -> Result<Mesh> {
        self.inverse_mesh.build()
    }

    /// Offset from inverse-mesh coordinates to forward-domain coordinates.
    pub fn shift(&self) -> (f64, f64) {
        match &self.window {
            Some(w) => {
                let (x0, y0) = w.origin();
                (x0 - self.inverse_mesh.ox, y0 - self.inverse_mesh.oy)
            }
            None => (0.0, 0.0),
        }
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        Nonlinearity::from_kind(self.nonlinearity)
    }

    /// `a` in forward-domain coordinates.
    pub fn coefficient_forward(&self) -> CoefficientA {
        self.coefficient.build()
    }

    /// `a` in inverse-mesh coordinates (shifted back into the forward domain).
    pub fn coefficient_inverse(&self) -> CoefficientA {
        let (dx, dy) = self.shift();
        self.coefficient.build().shifted(dx, dy)
    }

    /// True source sampled on the inverse mesh.
    pub fn u0_star(&self) -> Result<Vec<f64>> {
        let mesh = self.inverse_mesh()?;
        let (dx, dy) = self.shift();
        let src = self.source;
        Ok(mesh.sample_spatial(|x, y| src.eval(x + dx, y + dy)))
    }

    /// Forward-mesh initial state and its stationary boundary trace.
    pub fn forward_initial(&self) -> Result<(Vec<f64>, DirichletTrace)> {
        let mesh = self.forward_mesh()?;
        let src = self.source;
        Ok((
            mesh.sample_spatial(|x, y| src.eval(x, y)),
            DirichletTrace::stationary(&mesh, |x, y| src.eval(x, y)),
        ))
    }
}
