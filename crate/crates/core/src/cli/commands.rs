use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::array::{main_lobe_mse, sample_pattern, uniform_grid, write_pattern_csv, Codeword};
use crate::channel::{success_csv, success_rate, AngleModel, ChannelModel, TrainingConfig};
use crate::codebook::{self, HardwareDesign, IdealDesign, IdealMethod};
use crate::error::{invalid, Error, Result};
use crate::ideal::{ls_icd, PsIcd};
use crate::io::{self, CodewordFile, HybridFile};
use crate::practical::{deviation, FsAltMin, HybridCodeword};
use crate::target::TargetPattern;

use super::{required, BuildCodebook, DesignIdeal, DesignPractical, Interval, Pattern, Simulate, SnrDb, Table1, TargetKind};

/// Samples per main-lobe MSE evaluation.
const MSE_POINTS: usize = 1000;

pub fn design_ideal_defaults() -> DesignIdeal {
    DesignIdeal {
        method: Some(IdealMethod::PsIcd),
        n: Some(16),
        cover: Some(Interval { lo: -1.0, hi: 0.0 }),
        target: Some(TargetKind::Rect),
        step_heights: Some(vec![1.0, 2.0]),
        step_split: Some(0.5),
        k: Some(128),
        rmax: Some(2000),
        seed: Some(0),
        out: Some("codeword.json".into()),
        pattern: Some("pattern.csv".into()),
        points: Some(2048),
        files: Default::default(),
    }
}

pub fn design_practical_defaults() -> DesignPractical {
    DesignPractical {
        input: None,
        nrf: Some(vec![4]),
        b: Some(6),
        tmax: Some(crate::practical::DEFAULT_OUTER_ITERATIONS),
        seed: Some(0),
        seeds: Some(1),
        out: Some("hybrid.json".into()),
        report: Some("deviation.csv".into()),
        files: Default::default(),
    }
}

pub fn build_codebook_defaults() -> BuildCodebook {
    BuildCodebook {
        n: Some(32),
        m: Some(2),
        method: Some(IdealMethod::PsIcd),
        k: Some(128),
        rmax: Some(2000),
        seed: Some(0),
        nrf: None,
        b: Some(6),
        tmax: Some(crate::practical::DEFAULT_OUTER_ITERATIONS),
        out: Some("codebook.json".into()),
        files: Default::default(),
    }
}

pub fn simulate_defaults() -> Simulate {
    Simulate {
        tx: None,
        rx: None,
        snr: Some([-10.0, -5.0, 0.0, 5.0, 10.0].map(SnrDb).to_vec()),
        trials: Some(500),
        seed: Some(0),
        paths: Some(1),
        practical: Some(false),
        on_grid: Some(false),
        out: Some("success.csv".into()),
        json: None,
        record_trials: Some(false),
        files: Default::default(),
    }
}

pub fn pattern_defaults() -> Pattern {
    Pattern {
        input: None,
        points: Some(2048),
        out: Some("pattern.csv".into()),
        cover: None,
        files: Default::default(),
    }
}

pub fn table1_defaults() -> Table1 {
    Table1 {
        sizes: Some(vec![16, 32, 64, 128]),
        k: Some(128),
        rmax: Some(2000),
        seed: Some(0),
        seeds: Some(1),
        out: Some("table1.csv".into()),
        files: Default::default(),
    }
}

fn write_pattern(path: &Path, v: &Codeword, points: usize) -> Result<()> {
    if points < 2 {
        return invalid("pattern needs at least two points");
    }
    let mut buf = Vec::new();
    write_pattern_csv(&mut buf, &sample_pattern(v, &uniform_grid(points)))?;
    io::write_text(path, buf)?;
    Ok(())
}

fn target_for(s: &DesignIdeal) -> Result<TargetPattern> {
    let cover = required(&s.cover, "cover")?;
    match required(&s.target, "target")? {
        TargetKind::Rect => TargetPattern::rect(cover.lo, cover.hi),
        TargetKind::Triangular => TargetPattern::triangular(cover.lo, cover.hi),
        TargetKind::Step => {
            let h = required(&s.step_heights, "step_heights")?;
            if h.len() != 2 {
                return invalid(format!("--step-heights needs two values, got {}", h.len()));
            }
            TargetPattern::step(cover.lo, cover.hi, (h[0], h[1]), required(&s.step_split, "step_split")?)
        }
    }
}

pub fn design_ideal(s: &DesignIdeal) -> Result<()> {
    let target = target_for(s)?;
    let n = required(&s.n, "n")?;
    let k = required(&s.k, "k")?;
    let v = match required(&s.method, "method")? {
        IdealMethod::PsIcd => PsIcd {
            grid_size: k,
            max_iterations: required(&s.rmax, "rmax")?,
            seed: required(&s.seed, "seed")?,
        }
        .design(&target, n)?,
        IdealMethod::LsIcd => ls_icd(&target, n, k)?,
    };
    io::save_codeword(&required(&s.out, "out")?, &v)?;
    write_pattern(&required(&s.pattern, "pattern")?, &v, required(&s.points, "points")?)?;
    println!("main_lobe_mse {}", main_lobe_mse(&v, &target, MSE_POINTS)?);
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn design_practical(s: &DesignPractical) -> Result<()> {
    let v = io::load_codeword(&required(&s.input, "input")?)?;
    let chains = required(&s.nrf, "nrf")?;
    let seeds = required(&s.seeds, "seeds")?;
    if chains.is_empty() || seeds == 0 {
        return invalid("need at least one RF chain count and one seed");
    }
    let (bits, tmax, seed) = (required(&s.b, "b")?, required(&s.tmax, "tmax")?, required(&s.seed, "seed")?);
    let out = required(&s.out, "out")?;
    let mut report = String::from("n_rf,seed,deviation,outer_iterations,ill_conditioned\n");

    for &rf in &chains {
        let mut devs = Vec::with_capacity(seeds);
        for i in 0..seeds {
            let run_seed = seed.wrapping_add(i as u64);
            let alg = FsAltMin { rf_chains: rf, bits, max_iterations: tmax, seed: run_seed };
            let r = alg.design(&v)?;
            let e = deviation(&v, &r.codeword.codeword())?;
            devs.push(e);
            writeln!(report, "{rf},{run_seed},{e},{},{}", r.outer_iterations, r.ill_conditioned).unwrap();
            if r.ill_conditioned {
                eprintln!("warning: n_rf={rf} seed={run_seed}: singular analog Gram matrix, used pseudo-inverse");
            }
            if i == 0 {
                let path = if chains.len() > 1 { with_suffix(&out, &format!("-nrf{rf}")) } else { out.clone() };
                io::save_hybrid(&path, &r.codeword)?;
                let trace: Vec<String> = r.residual_trace.iter().map(f64::to_string).collect();
                println!("n_rf={rf} seed={run_seed} trace {}", trace.join(" "));
            }
        }
        println!("n_rf={rf} median_deviation {}", median(&mut devs));
    }
    io::write_text(&required(&s.report, "report")?, report)?;
    Ok(())
}

pub fn build_codebook(s: &BuildCodebook) -> Result<()> {
    let design = IdealDesign {
        method: required(&s.method, "method")?,
        grid_size: required(&s.k, "k")?,
        max_iterations: required(&s.rmax, "rmax")?,
        seed: required(&s.seed, "seed")?,
    };
    let hardware = match s.nrf {
        Some(rf) => Some(HardwareDesign {
            rf_chains: rf,
            bits: required(&s.b, "b")?,
            max_iterations: required(&s.tmax, "tmax")?,
        }),
        None => None,
    };
    let (n, m) = (required(&s.n, "n")?, required(&s.m, "m")?);
    let cb = codebook::build_codebook(n, m, design, hardware)?;
    io::save_codebook(&required(&s.out, "out")?, &cb)?;
    println!("layers {} entries {}", cb.depth(), cb.entries().count());
    Ok(())
}

pub fn simulate(s: &Simulate) -> Result<()> {
    let tx_path = required(&s.tx, "tx")?;
    let tx = io::load_codebook(&tx_path)?;
    let rx = match &s.rx {
        Some(p) if *p != tx_path => io::load_codebook(p)?,
        _ => tx.clone(),
    };
    let angles = if required(&s.on_grid, "on_grid")? { AngleModel::OnGrid } else { AngleModel::Continuous };
    let channel = ChannelModel { paths: required(&s.paths, "paths")?, angles, unit_gains: false };
    let record = required(&s.record_trials, "record_trials")?;
    let mut points = Vec::new();
    for snr in required(&s.snr, "snr")? {
        let cfg = TrainingConfig {
            snr_db: snr.0,
            trials: required(&s.trials, "trials")?,
            seed: required(&s.seed, "seed")?,
            use_practical: required(&s.practical, "practical")?,
            channel,
        };
        let p = success_rate(&tx, &rx, &cfg, record)?;
        println!("snr_db {} rate {} ci95 {}", p.snr_db, p.rate, p.ci95);
        points.push(p);
    }
    io::write_text(&required(&s.out, "out")?, success_csv(&points))?;
    if let Some(path) = &s.json {
        // infinite SNR limits are not valid JSON numbers
        let json: Vec<serde_json::Value> = points
            .iter()
            .map(|p| {
                let mut v = serde_json::to_value(p)?;
                v["snr_db"] = serde_json::to_value(SnrDb(p.snr_db))?;
                Ok(v)
            })
            .collect::<Result<_>>()?;
        io::write_json(path, &json)?;
    }
    Ok(())
}

fn load_any_codeword(path: &Path) -> Result<Codeword> {
    let text = io::read_text(path)?;
    if let Ok(f) = serde_json::from_str::<CodewordFile>(&text) {
        return f.try_into();
    }
    match serde_json::from_str::<HybridFile>(&text) {
        Ok(f) => Ok(HybridCodeword::try_from(f)?.codeword()),
        Err(_) => Err(Error::Format(format!("{} is neither a codeword nor a hybrid codeword", path.display()))),
    }
}

pub fn pattern(s: &Pattern) -> Result<()> {
    let v = load_any_codeword(&required(&s.input, "input")?)?;
    write_pattern(&required(&s.out, "out")?, &v, required(&s.points, "points")?)?;
    if let Some(cover) = s.cover {
        let target = TargetPattern::rect(cover.lo, cover.hi)?;
        println!("main_lobe_mse {}", main_lobe_mse(&v, &target, MSE_POINTS)?);
    }
    Ok(())
}

pub fn table1(s: &Table1) -> Result<()> {
    let (k, rmax, seed, seeds) = (
        required(&s.k, "k")?,
        required(&s.rmax, "rmax")?,
        required(&s.seed, "seed")?,
        required(&s.seeds, "seeds")?,
    );
    if seeds == 0 {
        return invalid("--seeds must be at least 1");
    }
    let target = TargetPattern::rect(-1.0, 0.0)?;
    let mut out = String::from("n,ps_icd_mse,ls_icd_mse\n");
    for n in required(&s.sizes, "sizes")? {
        let mut ps: Vec<f64> = (0..seeds)
            .map(|i| {
                let v = PsIcd { grid_size: k, max_iterations: rmax, seed: seed.wrapping_add(i as u64) }.design(&target, n)?;
                main_lobe_mse(&v, &target, MSE_POINTS)
            })
            .collect::<Result<_>>()?;
        let ps = median(&mut ps);
        let ls = main_lobe_mse(&ls_icd(&target, n, k)?, &target, MSE_POINTS)?;
        println!("n {n} ps_icd {ps:.4e} ls_icd {ls:.4e}");
        writeln!(out, "{n},{ps},{ls}").unwrap();
    }
    io::write_text(&required(&s.out, "out")?, out)?;
    Ok(())
}
