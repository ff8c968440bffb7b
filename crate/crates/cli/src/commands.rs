use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use spherequant::depth::{self, estimate_pole, TransportMaps};
use spherequant::distributions::{sample_uniform, sample_vmf, SphericalSample};
use spherequant::experiments;
use spherequant::geometry::rodrigues_rotation;
use spherequant::io;
use spherequant::maps::EntropicMapContext;
use spherequant::rng::{stream_seed, Stream};
use spherequant::solver;
use spherequant::UnitVector3;

use crate::config::{Direction, Law, RunConfig};
use crate::CliError;

fn output_file(config: &RunConfig, name: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&config.output).map_err(spherequant::Error::from)?;
    Ok(config.output.join(name))
}

fn create(path: &Path) -> Result<File, CliError> {
    Ok(File::create(path).map_err(spherequant::Error::from)?)
}

fn read_sample(path: &Path, config: &RunConfig) -> Result<SphericalSample, CliError> {
    let file = File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    Ok(io::read_sample(file, config.format)?)
}

/// The fitted context for the input sample and the persisted potential.
fn load_context(config: &RunConfig) -> Result<(SphericalSample, EntropicMapContext), CliError> {
    let data = read_sample(config.input()?, config)?;
    let potential = io::load_potential(&config.potential)?;
    let ctx = EntropicMapContext::new(
        potential,
        &data,
        config.n_uniform,
        stream_seed(config.solver.seed, Stream::Uniform),
    )?;
    Ok((data, ctx))
}

pub fn simulate(config: &RunConfig) -> Result<(), CliError> {
    let seed = stream_seed(config.solver.seed, Stream::Data);
    let sample = match config.law {
        Law::Uniform => sample_uniform(config.n, seed),
        Law::Vmf => sample_vmf(&config.mean, config.kappa, config.n, seed)?,
    };
    io::write_sample(create(&output_file(config, "sample.csv")?)?, &sample)?;
    Ok(())
}

pub fn fit(config: &RunConfig) -> Result<(), CliError> {
    let data = read_sample(config.input()?, config)?;
    let estimate = solver::fit(&data, &config.solver)?;
    if let Some(dir) = config.potential.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(spherequant::Error::from)?;
    }
    io::save_potential(&config.potential, &estimate)?;
    Ok(())
}

pub fn map(config: &RunConfig) -> Result<(), CliError> {
    let (data, ctx) = load_context(config)?;
    let points = match &config.points {
        Some(p) => read_sample(p, config)?,
        None => data,
    };
    let mapped = points
        .points
        .par_iter()
        .map(|x| match config.direction {
            Direction::Quantile => ctx.quantile_map(x),
            Direction::Distribution => ctx.distribution_map(x),
        })
        .collect::<spherequant::Result<Vec<_>>>()?;
    io::write_map_points(create(&output_file(config, "map.csv")?)?, &mapped)?;
    Ok(())
}

pub fn contours(config: &RunConfig) -> Result<(), CliError> {
    let (data, ctx) = load_context(config)?;
    let pole = estimate_pole(&ctx, &data)?;
    let contours = config
        .tau
        .iter()
        .map(|&tau| depth::quantile_contour(&ctx, tau, &pole, config.n_points))
        .collect::<spherequant::Result<Vec<_>>>()?;
    io::write_contours(create(&output_file(config, "contours.json")?)?, &contours)?;
    Ok(())
}

/// `k` sign directions equally spaced around the pole.
fn sign_directions(pole: &UnitVector3, k: usize) -> Vec<UnitVector3> {
    let rot = rodrigues_rotation(&UnitVector3::E3, pole);
    (0..k)
        .map(|i| {
            let (s, c) = (2.0 * std::f64::consts::PI * i as f64 / k as f64).sin_cos();
            UnitVector3::normalize(rot.apply(&[c, s, 0.0])).unwrap_or(*pole)
        })
        .collect()
}

pub fn signs(config: &RunConfig) -> Result<(), CliError> {
    let (data, ctx) = load_context(config)?;
    let pole = estimate_pole(&ctx, &data)?;
    let curves = sign_directions(&pole, config.n_signs)
        .iter()
        .map(|s| depth::sign_curve(&ctx, s, &pole, config.sign_points))
        .collect::<spherequant::Result<Vec<_>>>()?;
    io::write_sign_curves(create(&output_file(config, "signs.json")?)?, &curves)?;
    Ok(())
}

pub fn depth(config: &RunConfig) -> Result<(), CliError> {
    let (data, ctx) = load_context(config)?;
    let pole = estimate_pole(&ctx, &data)?;
    let points = match &config.points {
        Some(p) => read_sample(p, config)?,
        None => data,
    };
    let report = depth::depth_report(&ctx, &points.points, &pole)?;
    io::write_depth(create(&output_file(config, "depth.csv")?)?, &report)?;
    Ok(())
}

pub fn scale_curve(config: &RunConfig) -> Result<(), CliError> {
    let (data, ctx) = load_context(config)?;
    let pole = estimate_pole(&ctx, &data)?;
    let uniform = sample_uniform(config.n_eval, stream_seed(config.solver.seed, Stream::Evaluation));
    let curve = depth::scale_curve(&ctx, &config.alphas, &uniform, &pole)?;
    io::write_scale_curve(create(&output_file(config, "scale_curve.csv")?)?, &curve)?;
    Ok(())
}

pub fn experiment_mse(config: &RunConfig) -> Result<(), CliError> {
    let mse = config.mse_config();
    mse.validate()?;
    let mut w = BufWriter::new(create(&output_file(config, "mse.csv")?)?);
    experiments::write_mse_header(&mut w)?;
    experiments::run_mse_experiment_with(&mse, |row| experiments::write_mse_row(&mut w, row))?;
    w.flush().map_err(spherequant::Error::from)?;
    Ok(())
}

pub fn experiment_outliers(config: &RunConfig) -> Result<(), CliError> {
    let rows = experiments::run_outlier_experiment(&config.outlier_config())?;
    experiments::write_outlier_rows(create(&output_file(config, "outliers.csv")?)?, &rows)?;
    Ok(())
}
