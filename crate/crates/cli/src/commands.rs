use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use morphguard::embeddings::{load_dataset, write_dataset};
use morphguard::metrics::{
    apcer, compute_scores, det_sweep, evaluate, fmr, load_scores, wc_mmpmr, write_scores,
    ScoreOptions, ScoreSet, SystemScores, ThresholdRule, DEFAULT_SYSTEM,
};
use morphguard::morphing::{
    generate_interpolated_attacks, generate_wc_attacks, load_pairs, select_pairs, split_attacks,
    write_pairs, Endpoints, InterpolationSpec, PairStrategy,
};
use morphguard::rng::{substream, Stream};
use morphguard::simulator::{simulate_population, SimulationParams};
use morphguard::{Error, Result};
use serde_json::json;

use crate::output::{emit, write_atomic};
use crate::report::{write_histogram, write_sweep, HistogramSpec};

#[derive(Debug, Parser)]
#[command(
    name = "morphguard",
    version,
    about = "Morphing-attack vulnerability evaluation on simulated or ingested embeddings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a population of identities with vMF scatter.
    Simulate(SimulateArgs),
    /// Select identity pairs for morphing.
    Pairs(PairsArgs),
    /// Append worst-case (and optionally interpolated) morph rows.
    WcMorphs(WcMorphsArgs),
    /// Compute mated, non-mated and morph scores.
    Score(ScoreArgs),
    /// Compute decision thresholds for target rates.
    Thresholds(ThresholdsArgs),
    /// Evaluate every metric at an operating threshold as JSON.
    Metrics(MetricsArgs),
    /// Emit score histograms and the threshold sweep as CSV.
    Report(ReportArgs),
}

impl Command {
    pub fn run(self) -> Result<()> {
        match self {
            Command::Simulate(a) => a.run(),
            Command::Pairs(a) => a.run(),
            Command::WcMorphs(a) => a.run(),
            Command::Score(a) => a.run(),
            Command::Thresholds(a) => a.run(),
            Command::Metrics(a) => a.run(),
            Command::Report(a) => a.run(),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Embedding dimension.
    #[arg(long, default_value_t = 128)]
    d: usize,
    /// Number of identities.
    #[arg(long, default_value_t = 250)]
    n: usize,
    /// Samples per identity; the first is the enrollment.
    #[arg(long, default_value_t = 25)]
    samples: usize,
    #[arg(long, default_value_t = 250.0)]
    kappa_mu: f64,
    #[arg(long, default_value_t = 50.0)]
    kappa_sigma: f64,
    /// Concentrations below this are redrawn.
    #[arg(long, default_value_t = 1.0)]
    kappa_floor: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Embeddings CSV to write.
    #[arg(long)]
    out: PathBuf,
}

impl SimulateArgs {
    fn run(self) -> Result<()> {
        let params = SimulationParams {
            dimension: self.d,
            n_identities: self.n,
            samples_per_identity: self.samples,
            kappa_mu: self.kappa_mu,
            kappa_sigma: self.kappa_sigma,
            kappa_floor: self.kappa_floor,
            seed: self.seed,
        };
        let dataset = simulate_population(&params)?;
        write_atomic(&self.out, |w| write_dataset(&dataset, w))
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    #[value(alias = "most_similar")]
    MostSimilar,
    #[value(alias = "random_disjoint")]
    RandomDisjoint,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    /// Embeddings CSV; only bona fide rows are used.
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, value_enum, default_value = "most-similar")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pairs CSV to write.
    #[arg(long)]
    out: PathBuf,
}

impl PairsArgs {
    fn run(self) -> Result<()> {
        let (bonafide, _) = split_attacks(&load_dataset(&self.embeddings)?)?;
        let strategy = match self.strategy {
            StrategyArg::MostSimilar => PairStrategy::MostSimilar,
            StrategyArg::RandomDisjoint => PairStrategy::RandomDisjoint,
        };
        let pairs = select_pairs(
            &bonafide,
            strategy,
            &mut substream(self.seed, Stream::Pairing),
        )?;
        write_atomic(&self.out, |w| write_pairs(&pairs, w))
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EndpointsArg {
    /// Each subject's enrollment sample.
    Enrollment,
    /// Normalized average of each subject's bona fide samples.
    Mean,
}

impl From<EndpointsArg> for Endpoints {
    fn from(e: EndpointsArg) -> Self {
        match e {
            EndpointsArg::Enrollment => Endpoints::Enrollment,
            EndpointsArg::Mean => Endpoints::SubjectMean,
        }
    }
}

#[derive(Debug, Args)]
pub struct WcMorphsArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    /// Which embedding of each contributor the morphs are built from.
    #[arg(long, value_enum, default_value = "enrollment")]
    endpoints: EndpointsArg,
    /// Also add imperfect morphs, as LABEL:ALPHA_LO:ALPHA_HI:NOISE_ANGLE.
    /// Repeatable.
    #[arg(long, value_name = "SPEC", value_parser = parse_interpolation)]
    interpolated: Vec<InterpolationSpec>,
    /// Seed for the interpolated morphs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Embeddings CSV to write: the input rows plus one morph row per attack.
    #[arg(long)]
    out: PathBuf,
}

fn parse_interpolation(s: &str) -> std::result::Result<InterpolationSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [label, lo, hi, noise] = parts[..] else {
        return Err("expected LABEL:ALPHA_LO:ALPHA_HI:NOISE_ANGLE".into());
    };
    let num = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| format!("'{v}' is not a number"))
    };
    Ok(InterpolationSpec {
        label: label.to_owned(),
        alpha_range: (num(lo)?, num(hi)?),
        noise_angle: num(noise)?,
    })
}

impl WcMorphsArgs {
    fn run(self) -> Result<()> {
        let dataset = load_dataset(&self.embeddings)?;
        let pairs = load_pairs(&self.pairs)?;
        let endpoints = self.endpoints.into();
        let mut attacks = generate_wc_attacks(&dataset, &pairs, endpoints)?;
        for (i, spec) in self.interpolated.iter().enumerate() {
            let seed = self.seed.wrapping_add(i as u64);
            attacks.extend(generate_interpolated_attacks(
                &dataset, &pairs, endpoints, spec, seed,
            )?);
        }
        let out = dataset.with_records(attacks.iter().map(|a| a.to_sample()))?;
        write_atomic(&self.out, |w| write_dataset(&out, w))
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Embeddings CSV; morph rows become attacks.
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, default_value = DEFAULT_SYSTEM)]
    system_id: String,
    /// Keep at most this many non-mated scores.
    #[arg(long)]
    nonmated_cap: Option<usize>,
    /// Seed for the non-mated subsample.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scores CSV to write.
    #[arg(long)]
    out: PathBuf,
}

impl ScoreArgs {
    fn run(self) -> Result<()> {
        let (bonafide, attacks) = split_attacks(&load_dataset(&self.embeddings)?)?;
        let options = ScoreOptions {
            system_id: self.system_id,
            nonmated_cap: self.nonmated_cap,
            seed: self.seed,
        };
        let scores = compute_scores(&bonafide, &attacks, &options)?;
        write_atomic(&self.out, |w| write_scores(&scores, w))
    }
}

#[derive(Debug, Args)]
struct ScoreInput {
    /// Scores CSV; repeat to combine systems from several files.
    #[arg(long = "scores", required = true)]
    files: Vec<PathBuf>,
    /// System to evaluate. Defaults to the only system, or `default`.
    #[arg(long)]
    system: Option<String>,
}

impl ScoreInput {
    fn load(&self) -> Result<ScoreSet> {
        let mut merged = ScoreSet::default();
        for path in &self.files {
            for (name, scores) in load_scores(path)?.systems() {
                if merged.systems().contains_key(name) {
                    return Err(Error::InvalidRecord(format!(
                        "system '{name}' appears in more than one scores file"
                    ))
                    .in_file(path));
                }
                merged.insert(name.clone(), scores.clone());
            }
        }
        Ok(merged)
    }

    fn select<'a>(&self, set: &'a ScoreSet) -> Result<(String, &'a SystemScores)> {
        match &self.system {
            Some(name) => Ok((name.clone(), set.system(name)?)),
            None => set.primary().map(|(n, s)| (n.to_owned(), s)),
        }
    }
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("targets").required(true).multiple(true).args(["fmr", "apcer", "wcmmpmr"])))]
pub struct ThresholdsArgs {
    #[command(flatten)]
    input: ScoreInput,
    /// Target false match rate.
    #[arg(long)]
    fmr: Option<f64>,
    /// Target per-comparison APCER over all morphs.
    #[arg(long)]
    apcer: Option<f64>,
    /// Target worst-case MMPMR.
    #[arg(long)]
    wcmmpmr: Option<f64>,
    /// JSON file to write; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ThresholdsArgs {
    fn run(self) -> Result<()> {
        let set = self.input.load()?;
        let (system_id, scores) = self.input.select(&set)?;
        let mut thresholds = serde_json::Map::new();
        let rules = [
            self.fmr.map(ThresholdRule::Fmr),
            self.apcer.map(ThresholdRule::Apcer),
            self.wcmmpmr.map(ThresholdRule::WcMmpmr),
        ];
        for rule in rules.into_iter().flatten() {
            let t = rule.resolve(scores)?;
            let (name, target, rate) = match rule {
                ThresholdRule::Fmr(x) => ("fmr", x, fmr(scores, t)?),
                ThresholdRule::Apcer(x) => ("apcer", x, apcer(scores, t)?),
                ThresholdRule::WcMmpmr(x) => ("wcmmpmr", x, wc_mmpmr(scores, t)?),
                ThresholdRule::Fixed(_) => unreachable!("not offered as a flag"),
            };
            thresholds.insert(
                name.into(),
                json!({ "target": target, "threshold": t, "rate": rate }),
            );
        }
        let doc = json!({ "system_id": system_id, "thresholds": thresholds });
        emit(
            self.out.as_deref(),
            &(serde_json::to_string_pretty(&doc)? + "\n"),
        )
    }
}

fn parse_rule(s: &str) -> std::result::Result<ThresholdRule, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    input: ScoreInput,
    /// Operating threshold rule: fmr@X, apcer@X, wcmmpmr@X or fixed@T.
    #[arg(long, default_value = "fmr@0.001", value_parser = parse_rule)]
    rule: ThresholdRule,
    /// Values of r for MAP(r, c); c runs over all system counts.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    map_r: Vec<usize>,
    /// Summary JSON to write; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl MetricsArgs {
    fn run(self) -> Result<()> {
        let set = self.input.load()?;
        let (system_id, _) = self.input.select(&set)?;
        let summary = evaluate(&set, &system_id, self.rule, &self.map_r)?;
        emit(self.out.as_deref(), &(summary.to_json()? + "\n"))
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    input: ScoreInput,
    /// Number of uniform histogram bins over [0, pi].
    #[arg(long, default_value_t = 50)]
    bins: usize,
    /// Histogram CSV to write: label,bin_lo,bin_hi,count.
    #[arg(long)]
    hist_out: PathBuf,
    /// Threshold sweep CSV to write.
    #[arg(long)]
    sweep_out: PathBuf,
}

impl ReportArgs {
    fn run(self) -> Result<()> {
        let spec = HistogramSpec::new(self.bins)?;
        let set = self.input.load()?;
        let (_, scores) = self.input.select(&set)?;
        let rows = det_sweep(scores)?;
        write_atomic(&self.hist_out, |w| write_histogram(scores, spec, w))?;
        write_atomic(&self.sweep_out, |w| write_sweep(&rows, w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn interpolation_spec_parsing() {
        let spec = parse_interpolation("gan:0.3:0.7:0.1").unwrap();
        assert_eq!(spec.label, "gan");
        assert_eq!(spec.alpha_range, (0.3, 0.7));
        assert_eq!(spec.noise_angle, 0.1);
        assert!(parse_interpolation("gan:0.3:0.7").is_err());
        assert!(parse_interpolation("gan:x:0.7:0").is_err());
    }

    #[test]
    fn rule_parsing_reports_the_format() {
        assert_eq!(
            parse_rule("wcmmpmr@0.05").unwrap(),
            ThresholdRule::WcMmpmr(0.05)
        );
        assert!(parse_rule("eer").unwrap_err().contains("fmr@0.001"));
    }
}
