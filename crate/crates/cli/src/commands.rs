use std::fs;
use std::path::Path;

use hybrid_loss::chain::ChainModel;
use hybrid_loss::consistency::{alpha_condition, dominance_profile, simplex_risk_minimizer};
use hybrid_loss::dataset::{ChainDataset, FlatDataset, TrainingSet};
use hybrid_loss::experiments::{
    chunking_csv, decode_eval, dominance_csv, mixed_csv, non_dominant_csv, nondominant_csv,
    pairwise_csv, profile_rows, run_chunking, run_mixed_grid, run_nondominant_sweep, selection_csv,
    train, ChunkingConfig, MixedConfig, NondominantConfig, TopLabel,
};
use hybrid_loss::io::{
    fingerprint_chain, fingerprint_flat, flat_csv, parse_flat_csv, read_conll, write_conll,
    ModelArtifact, ModelKind, TaggedCorpus,
};
use hybrid_loss::losses::LossSpec;
use hybrid_loss::metrics::zero_one_error;
use hybrid_loss::model::{FlatInstance, LabelDistribution, WeightVector};
use hybrid_loss::optim::OptimConfig;
use hybrid_loss::pac_bayes::{appendix_bound_rhs, margin_losses, posterior_mean_margins, BoundInputs, PosteriorSampling};
use hybrid_loss::synth::{
    generate_chunk_corpus, generate_mixed, generate_nondominant, MixedEncoder, MixedPoint, MixedSpec, NonDominantSpec,
    SynthChunkSpec, NONDOMINANT_FEATURES,
};

use crate::{
    BoundArgs, ChunkingArgs, CliError, Command, ConsistencyArgs, DominanceArgs, EvalArgs, LossArg, MixedArgs,
    NondominantArgs, SynthKind, TopLabelArg, TrainArgs,
};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth { kind } => synth(kind),
        Command::Train(args) => train_model(args),
        Command::Eval(args) => eval(args),
        Command::SweepNondominant(args) => sweep_nondominant(args),
        Command::SweepMixed(args) => sweep_mixed(args),
        Command::Chunking(args) => chunking(args),
        Command::ConsistencyCheck(args) => consistency_check(args),
        Command::Dominance(args) => dominance(args),
        Command::Bound(args) => bound(args),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn loss_spec(loss: LossArg, alpha: Option<f64>) -> Result<LossSpec> {
    match (loss, alpha) {
        (LossArg::Hybrid, Some(a)) => Ok(LossSpec::hybrid(a)?),
        (LossArg::Hybrid, None) => Err(CliError::Usage("--alpha is required for the hybrid loss".into())),
        (_, Some(_)) => Err(CliError::Usage("--alpha only applies to the hybrid loss".into())),
        (LossArg::Log, None) => Ok(LossSpec::log()),
        (LossArg::Hinge, None) => Ok(LossSpec::hinge()),
    }
}

fn top_label(arg: TopLabelArg) -> TopLabel {
    match arg {
        TopLabelArg::First => TopLabel::First,
        TopLabelArg::Last => TopLabel::Last,
    }
}

fn mixed_split_csv(points: &[MixedPoint]) -> Result<String> {
    let labels: Vec<usize> = points.iter().map(|p| p.label).collect();
    let xs: Vec<Vec<f64>> = points.iter().map(|p| p.x.clone()).collect();
    Ok(flat_csv(&labels, &xs)?)
}

fn synth(kind: SynthKind) -> Result<()> {
    match kind {
        SynthKind::Nondominant {
            labels,
            samples,
            top_prob,
            top_label: top,
            seed,
            out,
        } => {
            let spec = NonDominantSpec {
                label_count: labels,
                top_prob,
                top_label: match top {
                    TopLabelArg::First => 0,
                    TopLabelArg::Last => labels.saturating_sub(1),
                },
                sample_count: samples,
                seed,
            };
            let (data, _) = generate_nondominant(&spec)?;
            let golds = data.golds();
            let xs = vec![NONDOMINANT_FEATURES.to_vec(); golds.len()];
            write_text(&out, &flat_csv(&golds, &xs)?)
        }
        SynthKind::Mixed {
            rho,
            samples,
            held_out,
            seed,
            out_dir,
        } => {
            let mut spec = MixedSpec::new(rho, samples, seed);
            spec.held_out_size = held_out;
            let data = generate_mixed(&spec)?;
            ensure_dir(&out_dir)?;
            write_text(&out_dir.join("train.csv"), &mixed_split_csv(&data.train)?)?;
            write_text(&out_dir.join("validation.csv"), &mixed_split_csv(&data.validation)?)?;
            write_text(&out_dir.join("test.csv"), &mixed_split_csv(&data.test)?)
        }
        SynthKind::Chunk {
            sentences,
            ambiguity,
            seed,
            out,
        } => {
            let generated = generate_chunk_corpus(&SynthChunkSpec::new(sentences, ambiguity, seed))?;
            Ok(write_conll(&generated.corpus, &out)?)
        }
    }
}

/// A flat CSV file encoded per label, with an optional bias input.
fn load_flat(path: &Path, labels: Option<usize>, bias: bool) -> Result<(FlatDataset, usize, usize)> {
    let (golds, xs) = parse_flat_csv(&read_text(path)?)?;
    let label_count = match labels {
        Some(k) => k,
        None => golds.iter().max().map_or(0, |m| m + 1),
    };
    let input_dim = xs.first().map_or(0, Vec::len);
    let instances = golds
        .iter()
        .zip(&xs)
        .map(|(&y, x)| FlatInstance::block_encoded(x, label_count, bias, y))
        .collect::<hybrid_loss::Result<Vec<_>>>()?;
    Ok((FlatDataset::new(instances)?, label_count, input_dim))
}

fn load_chain(path: &Path) -> Result<(TaggedCorpus, ChainDataset)> {
    let corpus = read_conll(path)?;
    let data = corpus.to_dataset()?;
    Ok((corpus, data))
}

fn train_model(args: TrainArgs) -> Result<()> {
    let spec = loss_spec(args.loss, args.alpha)?;
    let optim = OptimConfig {
        max_iterations: args.optim.max_iterations,
        gradient_tolerance: args.optim.gradient_tolerance,
        ..OptimConfig::default()
    };
    let (kind, fingerprint, result) = if is_csv(&args.data) {
        let bias = args.bias || args.standardize;
        let (data, label_count, input_dim) = load_flat(&args.data, args.labels, bias)?;
        let kind = ModelKind::Flat {
            label_count,
            input_dim,
            bias,
        };
        let result = if args.standardize {
            let (golds, xs) = parse_flat_csv(&read_text(&args.data)?)?;
            let points: Vec<MixedPoint> = golds
                .into_iter()
                .zip(xs)
                .map(|(label, x)| MixedPoint {
                    x,
                    label,
                    dominant: true,
                })
                .collect();
            let encoder = MixedEncoder::fit(&points, label_count)?;
            let mut result = train(spec, &encoder.encode(&points)?, args.lambda, &optim)?;
            result.weights = WeightVector::new(encoder.fold(result.weights.values())?)?;
            result
        } else {
            train(spec, &data, args.lambda, &optim)?
        };
        (kind, fingerprint_flat(&data), result)
    } else {
        if args.bias || args.standardize || args.labels.is_some() {
            return Err(CliError::Usage(
                "--bias, --standardize and --labels only apply to CSV data".into(),
            ));
        }
        let (_, data) = load_chain(&args.data)?;
        let kind = ModelKind::Chain(data.layout());
        (kind, fingerprint_chain(&data), train(spec, &data, args.lambda, &optim)?)
    };
    let artifact = ModelArtifact {
        kind,
        loss: spec,
        lambda: args.lambda,
        fingerprint,
        weights: result.weights.into_inner(),
    };
    artifact.save(&args.out)?;
    println!(
        "{spec} lambda {} iterations {} converged {} objective {}",
        args.lambda, result.iterations, result.converged, result.final_value
    );
    Ok(())
}

fn flat_for(artifact: &ModelArtifact, path: &Path) -> Result<FlatDataset> {
    let ModelKind::Flat {
        label_count,
        input_dim,
        bias,
    } = artifact.kind
    else {
        return Err(CliError::Usage("model is a chain model; pass CONLL data".into()));
    };
    let (data, _, dim) = load_flat(path, Some(label_count), bias)?;
    if dim != input_dim {
        return Err(hybrid_loss::Error::DimensionMismatch {
            weights: input_dim,
            features: dim,
        }
        .into());
    }
    Ok(data)
}

fn chain_for(artifact: &ModelArtifact, path: &Path) -> Result<(TaggedCorpus, ChainDataset)> {
    let ModelKind::Chain(layout) = artifact.kind else {
        return Err(CliError::Usage("model is a flat model; pass CSV data".into()));
    };
    let (corpus, data) = load_chain(path)?;
    if data.layout() != layout {
        return Err(hybrid_loss::Error::DimensionMismatch {
            weights: layout.dimension(),
            features: data.layout().dimension(),
        }
        .into());
    }
    Ok((corpus, data))
}

fn eval(args: EvalArgs) -> Result<()> {
    let artifact = ModelArtifact::load(&args.model)?;
    let chain = matches!(artifact.kind, ModelKind::Chain(_));
    if let Some(train_path) = &args.train_data {
        let computed = if chain {
            fingerprint_chain(&chain_for(&artifact, train_path)?.1)
        } else {
            fingerprint_flat(&flat_for(&artifact, train_path)?)
        };
        artifact.verify_fingerprint(&computed)?;
    }
    if chain {
        let (corpus, data) = chain_for(&artifact, &args.data)?;
        let e = decode_eval(&corpus, &data, &artifact.weights)?;
        println!("accuracy,precision,recall,f1");
        println!("{},{},{},{}", e.accuracy, e.precision, e.recall, e.f1);
    } else {
        let data = flat_for(&artifact, &args.data)?;
        let error = zero_one_error(&data.predictions(&artifact.weights)?, &data.golds())?;
        println!("accuracy");
        println!("{}", 1.0 - error);
    }
    Ok(())
}

fn sweep_nondominant(args: NondominantArgs) -> Result<()> {
    let mut config = NondominantConfig::new(args.seed);
    config.sample_count = args.samples;
    config.top_prob = args.top_prob;
    config.top_label = top_label(args.top_label);
    config.hybrid_alpha = args.alpha;
    config.lambda = args.lambda;
    config.label_counts = args.labels;
    let csv = nondominant_csv(&run_nondominant_sweep(&config)?);
    match args.out {
        Some(path) => write_text(&path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn sweep_mixed(args: MixedArgs) -> Result<()> {
    let mut config = MixedConfig::new(args.seed);
    if let Some(rhos) = args.rhos {
        config.rhos = rhos;
    }
    if let Some(sizes) = args.sizes {
        config.sizes = sizes;
    }
    if let Some(lambdas) = args.grid.lambdas {
        config.lambdas = lambdas;
    }
    if let Some(alphas) = args.grid.alphas {
        config.alphas = alphas;
    }
    config.held_out_size = args.held_out;
    let (rows, summary) = run_mixed_grid(&config)?;
    ensure_dir(&args.out_dir)?;
    write_text(&args.out_dir.join("mixed.csv"), &mixed_csv(&rows))?;
    let pairwise = pairwise_csv(&summary);
    write_text(&args.out_dir.join("pairwise.csv"), &pairwise)?;
    print!("{pairwise}");
    Ok(())
}

fn chunking(args: ChunkingArgs) -> Result<()> {
    let mut config = ChunkingConfig::new(args.seed);
    config.corpus = SynthChunkSpec::new(args.sentences, args.ambiguity, args.seed);
    if let Some(portions) = args.portions {
        config.portions = portions;
    }
    if let Some(lambdas) = args.grid.lambdas {
        config.lambdas = lambdas;
    }
    if let Some(alphas) = args.grid.alphas {
        config.alphas = alphas;
    }
    let report = run_chunking(&config)?;
    ensure_dir(&args.out_dir)?;
    let metrics = chunking_csv(&report.rows);
    let files: [(&str, String); 4] = [
        ("metrics.csv", metrics.clone()),
        ("selection.csv", selection_csv(&report.rows)),
        ("dominance.csv", dominance_csv(&report.dominance)),
        ("non_dominant.csv", non_dominant_csv(&report.non_dominant)),
    ];
    for (name, text) in &files {
        write_text(&args.out_dir.join(name), text)?;
    }
    print!("{metrics}");
    Ok(())
}

fn consistency_check(args: ConsistencyArgs) -> Result<()> {
    let q = LabelDistribution::new(args.q)?;
    let report = alpha_condition(&q)?;
    println!("key,value");
    println!("top_label,{}", report.top_label);
    println!("top_prob,{}", report.top_prob);
    println!("second_prob,{}", report.second_prob);
    println!("dominant,{}", report.dominant);
    println!("gap,{}", report.gap);
    println!("alpha_threshold,{}", report.alpha_threshold);
    if let Some(alpha) = args.alpha {
        let spec = if alpha == 0.0 {
            LossSpec::hinge()
        } else if alpha == 1.0 {
            LossSpec::log()
        } else {
            LossSpec::hybrid(alpha)?
        };
        let minimum = simplex_risk_minimizer(&spec, &q, args.resolution)?;
        let joined: Vec<String> = minimum.minimizer.iter().map(|p| p.to_string()).collect();
        println!("condition_satisfied,{}", report.satisfied_by(alpha));
        println!("oracle_minimizer,{}", joined.join(" "));
        println!("oracle_risk,{}", minimum.risk);
        println!("oracle_aligned,{}", minimum.is_aligned_with(&q)?);
    }
    Ok(())
}

fn dominance(args: DominanceArgs) -> Result<()> {
    let artifact = ModelArtifact::load(&args.model)?;
    let (_, data) = chain_for(&artifact, &args.data)?;
    let model = ChainModel::from_params(data.layout(), artifact.weights)?;
    let profile = dominance_profile(&model, data.instances())?;
    let mut rows = Vec::new();
    profile_rows("data", &profile, &mut rows);
    print!("{}", dominance_csv(&rows));
    eprintln!("non-dominant fraction {}", profile.non_dominant_fraction());
    Ok(())
}

fn bound(args: BoundArgs) -> Result<()> {
    let artifact = ModelArtifact::load(&args.model)?;
    let sampling = PosteriorSampling::new(args.samples, args.seed);
    let (margins, sample_size, label_count) = match artifact.kind {
        ModelKind::Flat { label_count, .. } => {
            let data = flat_for(&artifact, &args.data)?;
            artifact.verify_fingerprint(&fingerprint_flat(&data))?;
            let margins = posterior_mean_margins(&data, &artifact.weights, &sampling)?;
            (margins, data.len(), label_count)
        }
        ModelKind::Chain(layout) => {
            let (_, data) = chain_for(&artifact, &args.data)?;
            artifact.verify_fingerprint(&fingerprint_chain(&data))?;
            let margins = posterior_mean_margins(&data, &artifact.weights, &sampling)?;
            (margins, data.len(), layout.tag_count)
        }
    };
    let inputs = BoundInputs {
        weight_norm_sq: artifact.weights.iter().map(|w| w * w).sum(),
        sample_size,
        label_count,
        alpha: args.alpha,
        gamma: args.gamma,
        delta: args.delta,
        posterior_samples: args.samples,
        empirical_margin_losses: margin_losses(&margins, args.gamma),
    };
    let report = appendix_bound_rhs(&inputs)?;
    println!("key,value");
    println!("empirical,{}", report.empirical);
    println!("kl,{}", report.kl);
    println!("ln_a,{}", report.ln_a);
    println!("complexity,{}", report.complexity);
    println!("rhs,{}", report.rhs);
    println!("note,{}", report.note);
    Ok(())
}
