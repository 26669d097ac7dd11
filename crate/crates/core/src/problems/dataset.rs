use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::objective::Dataset;
use crate::problems::{
    sample_advection_ic, sample_grf, solve_advection, solve_poisson_1d, solve_reaction_diffusion, AdvectionCase,
    AdvectionICSpec, GrfSpec, ReactionDiffusion,
};
use crate::tensor::{DenseMatrix, Precision, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemTag {
    AdvectionI,
    AdvectionII,
    ReactionDiffusion,
    Green1d,
}

impl ProblemTag {
    pub const ALL: [ProblemTag; 4] = [
        ProblemTag::AdvectionI,
        ProblemTag::AdvectionII,
        ProblemTag::ReactionDiffusion,
        ProblemTag::Green1d,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemTag::AdvectionI => "advection-i",
            ProblemTag::AdvectionII => "advection-ii",
            ProblemTag::ReactionDiffusion => "reaction-diffusion",
            ProblemTag::Green1d => "green-1d",
        }
    }

    pub fn supported() -> String {
        ProblemTag::ALL.map(|t| t.as_str()).join(", ")
    }

    /// Whether the model for this problem decodes through a POD basis.
    pub fn uses_pod(self) -> bool {
        !matches!(self, ProblemTag::Green1d)
    }
}

impl fmt::Display for ProblemTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::UnknownProblem {
                tag: s.to_string(),
                supported: ProblemTag::supported(),
            })
    }
}

/// Everything needed to regenerate a dataset bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub tag: ProblemTag,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    /// Spatial nodes (sensors for the input functions).
    pub nx: usize,
    /// Time levels for the space-time problems.
    pub nt: usize,
    pub grf: GrfSpec,
    pub advection: AdvectionICSpec,
    pub reaction_diffusion: ReactionDiffusion,
}

impl DatasetSpec {
    /// Desk-scale defaults: the paper's grids with fewer samples.
    pub fn new(tag: ProblemTag, seed: u64) -> Self {
        let (n_train, n_test, nx, nt) = match tag {
            ProblemTag::AdvectionI | ProblemTag::AdvectionII => (200, 200, 40, 40),
            ProblemTag::ReactionDiffusion => (100, 100, 100, 100),
            ProblemTag::Green1d => (50, 200, 101, 1),
        };
        let case = if tag == ProblemTag::AdvectionII { AdvectionCase::II } else { AdvectionCase::I };
        let mut grf = GrfSpec::new(nx);
        grf.periodic = false;
        DatasetSpec {
            tag,
            n_train,
            n_test,
            seed,
            nx,
            nt,
            grf,
            advection: AdvectionICSpec::new(case),
            reaction_diffusion: ReactionDiffusion::default(),
        }
    }

    fn sync_grids(&self) -> (GrfSpec, AdvectionICSpec) {
        let mut grf = self.grf;
        grf.n = self.nx;
        let mut adv = self.advection;
        adv.nx = self.nx;
        adv.nt = self.nt;
        (grf, adv)
    }
}

/// Generated train/test splits.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateDataset {
    pub spec: DatasetSpec,
    pub train: Dataset,
    pub test: Dataset,
}

/// One `(input, output)` sample of problem `spec.tag`.
fn sample(spec: &DatasetSpec, rng: &mut RngState) -> Result<(Vec<f64>, Vec<f64>)> {
    let (grf, adv) = spec.sync_grids();
    match spec.tag {
        ProblemTag::AdvectionI | ProblemTag::AdvectionII => {
            let u0 = sample_advection_ic(&adv, rng);
            let u = solve_advection(&u0, adv.nt);
            Ok((u0, u.into_data()))
        }
        ProblemTag::ReactionDiffusion => {
            let f = sample_grf(&grf, rng).into_vec();
            let forcing = DenseMatrix::from_fn(spec.nt, spec.nx, |_, i| f[i]);
            let u = solve_reaction_diffusion(&forcing, &spec.reaction_diffusion)?;
            Ok((f, u.into_data()))
        }
        ProblemTag::Green1d => {
            let f = sample_grf(&grf, rng).into_vec();
            let u = solve_poisson_1d(&f)?;
            Ok((f, u))
        }
    }
}

fn split(spec: &DatasetSpec, label: &str, n: usize) -> Result<Dataset> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let (mut d_in, mut d_out) = (0, 0);
    for i in 0..n {
        // Per-sample streams keep samples independent of generation order.
        let mut rng = RngState::substream(spec.seed, &format!("{label}/{i}"));
        let (x, y) = sample(spec, &mut rng)?;
        d_in = x.len();
        d_out = y.len();
        xs.extend(x);
        ys.extend(y);
    }
    if n == 0 {
        let (din, dout) = shape_of(spec);
        d_in = din;
        d_out = dout;
    }
    Dataset::new(DenseMatrix::new(n, d_in, xs)?, DenseMatrix::new(n, d_out, ys)?)
}

/// Input and output widths of a problem.
pub fn shape_of(spec: &DatasetSpec) -> (usize, usize) {
    match spec.tag {
        ProblemTag::AdvectionI | ProblemTag::AdvectionII | ProblemTag::ReactionDiffusion => {
            (spec.nx, spec.nx * spec.nt)
        }
        ProblemTag::Green1d => (spec.nx, spec.nx),
    }
}

/// Generates the train and test splits from the `train/<i>` and `test/<i>`
/// substreams of `spec.seed`, rounding to `precision`.
pub fn build_dataset(spec: &DatasetSpec, precision: Precision) -> Result<SurrogateDataset> {
    if spec.nx < 3 {
        return Err(Error::Dimension(format!("grid needs at least 3 nodes, got {}", spec.nx)));
    }
    let round = |d: Dataset| Dataset {
        x: d.x.map(|v| precision.round(v)),
        y: d.y.map(|v| precision.round(v)),
    };
    let train = round(split(spec, "train", spec.n_train)?);
    let test = round(split(spec, "test", spec.n_test)?);
    Ok(SurrogateDataset {
        spec: spec.clone(),
        train,
        test,
    })
}
