use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use super::config::{
    CorpusConfig, ExperimentConfig, FamilyConfig, GridConfig, LadderConfig, OptionValue, OutputConfig, ParamsConfig, SymbolConfig,
};
use super::runners;
use super::Report;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct OptionInfo {
    pub key: &'static str,
    pub list: bool,
    pub help: &'static str,
}

#[derive(Clone, Copy, Debug)]
pub struct ToleranceInfo {
    pub key: &'static str,
    pub default: f64,
    pub help: &'static str,
}

pub struct ExperimentInfo {
    pub name: &'static str,
    /// The claim the experiment reproduces.
    pub anchor: &'static str,
    pub summary: &'static str,
    pub options: &'static [OptionInfo],
    pub tolerances: &'static [ToleranceInfo],
    pub needs_corpus: bool,
    pub needs_symbol: bool,
    pub defaults: fn() -> ExperimentConfig,
    pub runner: fn(&ExperimentConfig) -> Result<Report>,
}

const fn opt(key: &'static str, list: bool, help: &'static str) -> OptionInfo {
    OptionInfo { key, list, help }
}

const fn tol(key: &'static str, default: f64, help: &'static str) -> ToleranceInfo {
    ToleranceInfo { key, default, help }
}

fn base(name: &str, grid: (usize, f64, usize), params: (f64, f64), family: (i32, i32), ladder: (i32, i32, bool)) -> ExperimentConfig {
    ExperimentConfig {
        experiment: name.to_string(),
        seed: 1,
        grid: GridConfig { dim: grid.0, half_width: grid.1, samples: grid.2 },
        params: ParamsConfig { q: params.0, lambda: params.1 },
        family: FamilyConfig::Dyadic { j_min: family.0, j_max: family.1 },
        ladder: LadderConfig { j_lo: ladder.0, j_hi: ladder.1, truncated: ladder.2 },
        corpus: CorpusConfig { stagger: 1, ..CorpusConfig::default() },
        symbol: None,
        output: OutputConfig { dir: PathBuf::from("out").join(name), plots: true },
        tolerances: BTreeMap::new(),
        options: BTreeMap::new(),
    }
}

fn smooth(sides: &[f64], per_side: usize, corner: f64) -> CorpusConfig {
    CorpusConfig { sides: sides.to_vec(), per_side, corner, stagger: 1, ..CorpusConfig::default() }
}

fn num(v: f64) -> OptionValue {
    OptionValue::Number(v)
}

fn list_of(v: &[f64]) -> OptionValue {
    OptionValue::List(v.to_vec())
}

fn dyadic_sides(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).rev().map(|j| 2f64.powi(-j)).collect()
}

fn morrey_scaling() -> ExperimentConfig {
    let mut c = base("morrey-scaling", (1, 8.0, 16384), (0.5, 1.0), (-4, 8), (-4, 8, false));
    c.seed = 3;
    c.corpus = smooth(&[1.0], 1, -0.5);
    c.with_option("factors", list_of(&[2.0, 4.0]))
}

fn atom_uniform_bound() -> ExperimentConfig {
    let mut c = base("atom-uniform-bound", (1, 8.0, 4096), (0.5, 1.0), (-4, 8), (0, 9, true));
    c.corpus = CorpusConfig {
        sides: dyadic_sides(0, 4),
        per_side: 10,
        corner: -0.5,
        stagger: 4,
        rough_sides: vec![1.0, 2.0, 4.0],
        rough_count: 10,
        rough_corner: -2.0,
        files: Vec::new(),
    };
    c
}

fn frequency_options(c: ExperimentConfig) -> ExperimentConfig {
    c.with_option("j_lo", num(-5.0))
        .with_option("j_hi", num(3.0))
        .with_option("fit_lo", num(-5.0))
        .with_option("fit_hi", num(-2.0))
        .with_option("refine", num(1.0))
}

fn decay_homogeneous() -> ExperimentConfig {
    let mut c = base("decay-homogeneous", (1, 32.0, 16384), (2.0 / 3.0, 2.0 / 3.0), (-5, 8), (0, 8, true));
    c.corpus = CorpusConfig { rough_sides: vec![1.0], rough_count: 1, ..smooth(&[0.25, 0.5, 1.0], 3, 0.0) };
    frequency_options(c)
}

fn decay_local() -> ExperimentConfig {
    let mut c = base("decay-local", (1, 32.0, 16384), (2.0 / 3.0, 2.0 / 3.0), (-5, 8), (0, 8, true));
    c.corpus = CorpusConfig { rough_sides: vec![1.0, 2.0, 4.0], rough_count: 6, rough_corner: -2.0, ..smooth(&[0.25, 0.5, 1.0], 2, 0.0) };
    frequency_options(c)
}

fn hkp_closedform() -> ExperimentConfig {
    base("hkp-closedform", (1, 16.0, 1024), (1.0, 2.0), (-2, 4), (0, 4, true))
        .with_option("k", list_of(&[1.0, 2.0, 3.0]))
        .with_option("eps", list_of(&[1.0, 2.0]))
        .with_option("frac", num(0.5))
        .with_option("growth_k", num(1.0))
        .with_option("growth_lambda", num(2.0))
        .with_option("growth_eps", list_of(&[1.0, 2.0, 4.0, 8.0]))
}

fn moment_necessity() -> ExperimentConfig {
    let mut c = base("moment-necessity", (1, 32.0, 16384), (2.0 / 3.0, 2.0 / 3.0), (-5, 8), (0, 8, true));
    c.corpus = smooth(&[0.25, 0.5, 1.0], 2, 0.0);
    c.symbol = Some(SymbolConfig { spec: "smoothmult:r=1,c=-0.5".into(), control: None });
    frequency_options(c)
}

fn blockdecomp_roundtrip() -> ExperimentConfig {
    base("blockdecomp-roundtrip", (1, 8.0, 2048), (0.5, 1.0), (-4, 7), (0, 8, true))
        .with_option("functions", num(20.0))
        .with_option("psi_radius", num(0.5))
        .with_option("coeff_j_min", num(-4.0))
        .with_option("coeff_j_max", num(0.0))
}

fn psido_bounded() -> ExperimentConfig {
    // h = 2^-13, so the smallest atom spans 64 samples
    let mut c = base("psido-bounded", (1, 2.0, 32768), (0.5, 0.5), (-2, 13), (-3, 13, false));
    c.seed = 7;
    c.corpus = smooth(&dyadic_sides(0, 7), 2, 0.0);
    c.symbol = Some(SymbolConfig { spec: "modulated:j=1,w=0.25".into(), control: Some("smoothmult:r=1,c=0.5".into()) });
    c
}

fn psido_blowup() -> ExperimentConfig {
    base("psido-blowup", (1, 16.0, 8192), (1.0, 1.0), (-4, 8), (0, 8, true))
        .with_option("m", num(0.5))
        .with_option("k", num(2.0))
        .with_option("j", num(0.0))
        .with_option("eps", list_of(&[1.0, 0.5, 0.25]))
        .with_option("bound_eps", list_of(&[2f64.powi(-14), 2f64.powi(-15)]))
}

fn kernel_decay() -> ExperimentConfig {
    base("kernel-decay", (1, 8.0, 1024), (1.0, 1.0), (-2, 4), (0, 4, true))
        .with_option("eps", num(1.0 / 512.0))
        .with_option("dxi", num(1.0 / 32.0))
        .with_option("d_lo", num(0.25))
        .with_option("d_hi", num(2.0))
        .with_option("points", num(12.0))
        .with_option("cutoff_t", list_of(&[1.0, 0.5, 0.25]))
}

fn hardy_inequality() -> ExperimentConfig {
    let mut c = base("hardy-inequality", (1, 16.0, 8192), (0.5, 2.0 / 3.0), (-5, 8), (-5, 8, false));
    c.seed = 5;
    c.corpus = smooth(&[1.0, 0.5, 0.25], 2, 0.0);
    c.with_option("freq_j_min", num(-6.0)).with_option("freq_j_max", num(5.0)).with_option("dilation", num(0.5))
}

fn global_local_gap() -> ExperimentConfig {
    let mut c = base("global-local-gap", (1, 8.0, 2048), (0.5, 1.0), (-4, 7), (-4, 7, false));
    c.seed = 5;
    c.corpus = smooth(&dyadic_sides(0, 4), 1, 0.0);
    c.with_option("psi_radius", num(0.5)).with_option("refine", num(2.0))
}

fn regularization() -> ExperimentConfig {
    let mut c = base("regularization", (1, 8.0, 4096), (0.5, 1.0), (-4, 8), (-4, 8, false));
    c.seed = 5;
    c.corpus = smooth(&[1.0, 0.5, 0.25], 1, 0.0);
    c.with_option("gamma", num(2.0)).with_option("t", list_of(&dyadic_sides(0, 6)))
}

const FREQ_OPTIONS: &[OptionInfo] = &[
    opt("j_lo", false, "lowest annulus 2^j_lo <= |xi| < 2^(j_lo+1)"),
    opt("j_hi", false, "highest annulus"),
    opt("fit_lo", false, "first annulus of the slope fit"),
    opt("fit_hi", false, "last annulus of the slope fit"),
    opt("refine", false, "zero-padding factor of the frequency lattice"),
];

static CATALOG: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "morrey-scaling",
        anchor: "f(R.) has Morrey and Hardy-Morrey norms R^(-n/lambda) times those of f",
        summary: "compresses each corpus atom by integer powers of two and fits the norm exponent",
        options: &[opt("factors", true, "compression factors R, powers of two")],
        tolerances: &[
            tol("scaling", 0.02, "relative deviation of each norm ratio from R^(-n/lambda)"),
            tol("exponent", 0.02, "relative error of the fitted exponent"),
        ],
        needs_corpus: true,
        needs_symbol: false,
        defaults: morrey_scaling,
        runner: runners::morrey_scaling,
    },
    ExperimentInfo {
        name: "atom-uniform-bound",
        anchor: "smooth atoms and rough blocks have local Hardy-Morrey norm bounded by one constant",
        summary: "local Hardy-Morrey norms over seeded smooth atoms of several sizes and rough blocks",
        options: &[],
        tolerances: &[tol("band", 10.0, "max/min of the norms over the corpus")],
        needs_corpus: true,
        needs_symbol: false,
        defaults: atom_uniform_bound,
        runner: runners::atom_uniform_bound,
    },
    ExperimentInfo {
        name: "decay-homogeneous",
        anchor: "f in HM^lambda_q with lambda <= 1 has |f_hat(xi)| <= C |xi|^(n(1/lambda-1)) ||f||",
        summary: "low-frequency slope of annulus sups of |f_hat| for smooth atoms; rough blocks are the negative control",
        options: FREQ_OPTIONS,
        tolerances: &[tol("slope", 0.1, "allowed shortfall of the slope below n(1/lambda-1)")],
        needs_corpus: true,
        needs_symbol: false,
        defaults: decay_homogeneous,
        runner: runners::decay_homogeneous,
    },
    ExperimentInfo {
        name: "decay-local",
        anchor: "f in hM^lambda_q has |f_hat(xi)| <= C <xi>^(n(1/lambda-1)) ||f||, rough blocks included",
        summary: "inhomogeneous decay constants per atom and per cube size, normalized by the local norm",
        options: FREQ_OPTIONS,
        tolerances: &[tol("band", 10.0, "max/min of C / ||f||_hM over the corpus")],
        needs_corpus: true,
        needs_symbol: false,
        defaults: decay_local,
        runner: runners::decay_local,
    },
    ExperimentInfo {
        name: "hkp-closedform",
        anchor: "the explicit atoms a_eps have a closed-form transform; for lambda > 1, |a_eps_hat(0, 1/(4 eps))| ~ eps^(n(1-1/lambda))",
        summary: "DFT against the closed form, and the growth law read off the lattice",
        options: &[
            opt("k", true, "moment orders"),
            opt("eps", true, "dilations for the closed-form comparison"),
            opt("frac", false, "resolved band |xi_i| <= frac/(2h)"),
            opt("growth_k", false, "moment order for the growth law"),
            opt("growth_lambda", false, "lambda for the growth law, > 1"),
            opt("growth_eps", true, "dilations for the growth law"),
        ],
        tolerances: &[
            tol("closed_form", 1e-6, "max |DFT - closed form| / max |closed form|"),
            tol("growth", 0.05, "relative error of the growth slope"),
        ],
        needs_corpus: false,
        needs_symbol: false,
        defaults: hkp_closedform,
        runner: runners::hkp_closedform,
    },
    ExperimentInfo {
        name: "moment-necessity",
        anchor: "Hardy-Morrey spaces with lambda <= 1 are not closed under multiplication by test functions",
        summary: "multiplying atoms by a smooth bump destroys the vanishing moments and the homogeneous decay",
        options: FREQ_OPTIONS,
        tolerances: &[
            tol("spectral_zero", 1e-8, "scaled |d^alpha f_hat(0)| counted as zero"),
            tol("slope", 0.1, "allowed shortfall of the slope below n(1/lambda-1)"),
        ],
        needs_corpus: true,
        needs_symbol: true,
        defaults: moment_necessity,
        runner: runners::moment_necessity,
    },
    ExperimentInfo {
        name: "blockdecomp-roundtrip",
        anchor: "f = sum s_Q b_Q over rough blocks with ||{s_Q}||_{lambda,q} <= C ||f||_hM",
        summary: "decomposes seeded test functions into rough blocks and compares coefficient and local norms",
        options: &[
            opt("functions", false, "number of test functions"),
            opt("psi_radius", false, "plateau radius of the moment-unit kernel"),
            opt("coeff_j_min", false, "coarsest level of the coefficient family"),
            opt("coeff_j_max", false, "finest level of the coefficient family"),
        ],
        tolerances: &[
            tol("reconstruction", 1e-10, "max |sum s_Q b_Q - psi * f| / ||f||_inf"),
            tol("coefficient_bound", 10.0, "corpus-wide C in ||{s_Q}|| <= C ||f||_hM"),
        ],
        needs_corpus: false,
        needs_symbol: false,
        defaults: blockdecomp_roundtrip,
        runner: runners::blockdecomp_roundtrip,
    },
    ExperimentInfo {
        name: "psido-bounded",
        anchor: "operators with symbols in S^0_{1,0} are bounded on local Hardy-Morrey spaces",
        summary: "operator-norm probe over atoms of two decades of sizes; a moment-destroying multiplier in the global norm is the control",
        options: &[],
        tolerances: &[
            tol("trend", 0.1, "|slope of log ratio against log side|"),
            tol("control_trend", 0.0, "the control trend must exceed this"),
        ],
        needs_corpus: true,
        needs_symbol: true,
        defaults: psido_bounded,
        runner: runners::psido_bounded,
    },
    ExperimentInfo {
        name: "psido-blowup",
        anchor: "⟨D⟩^m for m>0 is not bounded on local Hardy-Morrey spaces: ||⟨D⟩^m a_eps|| grows like eps^(-m)",
        summary: "closed-form lower bound and measured local norm of <D>^m a_eps for dilated explicit atoms",
        options: &[
            opt("m", false, "order of <D>^m"),
            opt("k", false, "vanishing moments of a_eps; q = n/(n+k-1)"),
            opt("j", false, "frequency 1/(4 j eps); 0 means j = k"),
            opt("eps", true, "dilations for the measured norm, powers of two <= 1"),
            opt("bound_eps", true, "two dilations for the lower-bound ratio"),
        ],
        tolerances: &[
            tol("bound_ratio", 1e-6, "|bound(eps2)/bound(eps1) - 2^m|"),
            tol("measured_slope", 0.3, "measured slope must be <= -m + this"),
        ],
        needs_corpus: false,
        needs_symbol: false,
        defaults: psido_blowup,
        runner: runners::psido_blowup,
    },
    ExperimentInfo {
        name: "kernel-decay",
        anchor: "the kernel of a(x,D) with a in S^m_{rho,delta} satisfies |K(x,y)| <= C |x-y|^(-(m+n)/rho) off the diagonal",
        summary: "regularized kernels of the built-in order-0 symbols, the Bessel kernel oracle, and the frequency-cutoff identity",
        options: &[
            opt("eps", false, "Gaussian regularization scale"),
            opt("dxi", false, "frequency lattice spacing"),
            opt("d_lo", false, "smallest |x-y|"),
            opt("d_hi", false, "largest |x-y|"),
            opt("points", false, "log-spaced distances"),
            opt("cutoff_t", true, "scales for apply(freqcutoff) = mollify"),
        ],
        tolerances: &[
            tol("decay_slack", 0.3, "fitted slope may exceed -(m+n)/rho by this"),
            tol("bessel", 1e-3, "relative error against pi exp(-2 pi |x|) for <xi>^-2"),
            tol("cutoff_identity", 1e-8, "max |apply - mollify| / ||mollify||_inf"),
        ],
        needs_corpus: false,
        needs_symbol: false,
        defaults: kernel_decay,
        runner: runners::kernel_decay,
    },
    ExperimentInfo {
        name: "hardy-inequality",
        anchor: "|| |xi|^(n(1-2/lambda)) f_hat ||_{M^lambda_q} <= C ||f||_{HM^lambda_q} for q < lambda <= 1",
        summary: "Hardy-type inequality ratio over atoms of several sizes and under dilation",
        options: &[
            opt("freq_j_min", false, "coarsest dyadic level of the frequency family"),
            opt("freq_j_max", false, "finest dyadic level of the frequency family"),
            opt("dilation", false, "dilation factor for the invariance check"),
        ],
        tolerances: &[
            tol("band", 10.0, "max/min of the ratio over the corpus"),
            tol("dilation", 0.1, "relative change of the ratio under dilation"),
        ],
        needs_corpus: true,
        needs_symbol: false,
        defaults: hardy_inequality,
        runner: runners::hardy_inequality,
    },
    ExperimentInfo {
        name: "global-local-gap",
        anchor: "||f - psi * f||_HM <= C ||f||_hM when psi_hat = 1 near the origin",
        summary: "gap ratio over smooth atoms, at two grid resolutions",
        options: &[opt("psi_radius", false, "plateau radius of psi_hat"), opt("refine", false, "grid refinement factor, a power of two")],
        tolerances: &[
            tol("gap_bound", 10.0, "max ratio over the corpus"),
            tol("refinement", 0.1, "relative change of the max ratio under refinement"),
        ],
        needs_corpus: true,
        needs_symbol: false,
        defaults: global_local_gap,
        runner: runners::global_local_gap,
    },
    ExperimentInfo {
        name: "regularization",
        anchor: "||phi_t * f||_{M^gamma_p} <= C t^(n(1/gamma-1/lambda)) ||f||_{HM^lambda_q} for p/gamma = q/lambda, lambda <= gamma",
        summary: "normalized regularization ratio across scales t for smooth atoms",
        options: &[opt("gamma", false, "target index gamma >= lambda; p = q gamma / lambda"), opt("t", true, "mollification scales")],
        tolerances: &[tol("ratio_bound", 10.0, "max normalized ratio over atoms and scales")],
        needs_corpus: true,
        needs_symbol: false,
        defaults: regularization,
        runner: runners::regularization,
    },
];

pub fn catalog() -> &'static [ExperimentInfo] {
    CATALOG
}

pub fn find(name: &str) -> Result<&'static ExperimentInfo> {
    CATALOG.iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownExperiment(name.to_string()))
}

/// One line per experiment.
pub fn list() -> String {
    let width = CATALOG.iter().map(|e| e.name.len()).max().unwrap_or(0);
    CATALOG.iter().map(|e| format!("{:width$}  {}\n", e.name, e.summary)).collect()
}

/// Anchor, required configuration, options, default tolerances and a
/// ready-to-run default config.
pub fn describe(name: &str) -> Result<String> {
    let e = find(name)?;
    let d = (e.defaults)();
    let mut s = String::new();
    let _ = writeln!(s, "{}\n  {}\n", e.name, e.summary);
    let _ = writeln!(s, "anchor: {}\n", e.anchor);
    let mut required = vec!["experiment", "seed"];
    if e.needs_corpus {
        required.push("[corpus]");
    }
    if e.needs_symbol {
        required.push("[symbol]");
    }
    let _ = writeln!(s, "required: {} (other sections default as below)", required.join(", "));
    if !e.options.is_empty() {
        let _ = writeln!(s, "\noptions:");
        for o in e.options {
            let v = match d.options.get(o.key) {
                Some(OptionValue::Number(x)) => x.to_string(),
                Some(OptionValue::List(xs)) => format!("{xs:?}"),
                None => "-".into(),
            };
            let _ = writeln!(s, "  {:14} {:24} {}", o.key, v, o.help);
        }
    }
    let _ = writeln!(s, "\ndefault tolerances:");
    for t in e.tolerances {
        let _ = writeln!(s, "  {:18} {:<10e} {}", t.key, t.default, t.help);
    }
    let _ = writeln!(s, "\ndefault config:\n{}", d.to_toml()?);
    Ok(s)
}
