//! One function per experiment kind, each producing a CSV table.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use mfgibbs::divergence::format_float;
use mfgibbs::lattice::gibbs_pushforward;
use mfgibbs::mixture::{critical_cw_pushforward, mixture_pushforward, product_baseline};
use mfgibbs::{
    chi_square_gof, find_maximizers, kl, laplace_log_z, marginal_counts, moments, sample_gibbs, sample_mixture, tv,
    ModelAnalysis, SweepTable,
};

use crate::config::{ExperimentConfig, Kind};

/// Comment lines, a header row, data rows, then comment footer lines.
#[derive(Debug, Default)]
pub struct Table {
    meta: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    footer: Vec<String>,
}

impl Table {
    fn new<S: Into<String>>(config: &ExperimentConfig, header: impl IntoIterator<Item = S>) -> Self {
        let mut meta = vec![
            ("kind".to_string(), config.kind.to_string()),
            ("model".to_string(), config.model.clone()),
        ];
        for (k, v) in &config.params {
            meta.push((k.clone(), format_float(*v)));
        }
        if config.kind != Kind::Analyze {
            meta.push(("delta".into(), format_float(config.delta())));
            meta.push(("nodes_per_dim".into(), config.quadrature.nodes_per_dim.to_string()));
            meta.push(("target_tol".into(), format_float(config.quadrature.target_tol)));
        }
        if config.kind == Kind::SampleCheck {
            meta.push(("seed".into(), config.seed.to_string()));
            meta.push(("samples".into(), config.sampling.samples.to_string()));
            meta.push(("alpha".into(), format_float(config.sampling.alpha)));
        }
        Self {
            meta,
            header: header.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    fn fit_footer(&mut self, sweep: &SweepTable, label: &str) {
        match sweep.fit_rate(label) {
            Ok(fit) => self.footer.push(format!(
                "fit {label}: slope={} intercept={} max_residual={}",
                format_float(fit.slope),
                format_float(fit.intercept),
                format_float(fit.residual)
            )),
            Err(e) => self.footer.push(format!("fit {label}: unavailable ({e})")),
        }
    }

    pub fn footer(&self) -> &[String] {
        &self.footer
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        for f in &self.footer {
            let _ = writeln!(out, "# {f}");
        }
        out
    }
}

fn f(x: f64) -> String {
    format_float(x)
}

pub fn run(config: &ExperimentConfig) -> Result<Table> {
    config.validate()?;
    match config.kind {
        Kind::Analyze => analyze(config),
        Kind::Partition => partition(config),
        Kind::KlSweep => kl_sweep(config),
        Kind::Chaos => chaos(config),
        Kind::Critical => critical(config),
        Kind::SampleCheck => sample_check(config),
    }
}

fn analysis(config: &ExperimentConfig) -> Result<ModelAnalysis> {
    let model = config.model_spec()?;
    find_maximizers(&model, 32, 1e-12).context("maximizer search")
}

fn analyze(config: &ExperimentConfig) -> Result<Table> {
    let a = analysis(config)?;
    let q = a.model.q();
    let d = q - 1;
    let mut header: Vec<String> = ["j", "weight", "relative_weight", "g_value"].map(String::from).into();
    header.extend((1..=q).map(|k| format!("m_{k}")));
    header.extend((1..=d).map(|k| format!("h_eig_{k}")));
    for i in 1..=d {
        header.extend((i..=d).map(|j| format!("sigma_{i}{j}")));
    }
    let curie_weiss = a.model.label() == "curie_weiss";
    if curie_weiss {
        header.push("magnetization".into());
    }
    let mut table = Table::new(config, header);
    for (j, p) in a.maximizers.iter().enumerate() {
        let mut cells = vec![
            (j + 1).to_string(),
            f(p.weight),
            f(p.weight / a.total_weight),
            f(p.g_value),
        ];
        cells.extend(p.location.probs().iter().map(|x| f(*x)));
        let mut eigs: Vec<f64> = p.hessian.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        eigs.sort_by(f64::total_cmp);
        cells.extend(eigs.into_iter().map(f));
        for i in 0..d {
            for k in i..d {
                cells.push(f(p.sigma[(i, k)]));
            }
        }
        if curie_weiss {
            cells.push(f(1.0 - 2.0 * p.hat()[0]));
        }
        table.row(cells);
    }
    table.footer.push(format!("sup_g={}", f(a.sup_g)));
    table.footer.push(format!("maximizers={}", a.p()));
    Ok(table)
}

fn partition(config: &ExperimentConfig) -> Result<Table> {
    let a = analysis(config)?;
    let mut table = Table::new(config, vec!["n", "log_z_exact", "log_z_laplace", "gap"]);
    let mut sweep = SweepTable::new();
    for &n in &config.n_list {
        let (_, lz) = gibbs_pushforward(&a.model, n).with_context(|| format!("exact pushforward at N={n}"))?;
        let laplace = laplace_log_z(&a, n);
        table.row(vec![n.to_string(), f(lz), f(laplace), f(lz - laplace)]);
        sweep.push(n, (lz - laplace).abs(), "abs_gap")?;
    }
    if config.n_list.len() >= 4 {
        table.fit_footer(&sweep, "abs_gap");
    }
    Ok(table)
}

fn kl_sweep(config: &ExperimentConfig) -> Result<Table> {
    let a = analysis(config)?;
    let policy = config.policy()?;
    let quad = config.quadrature()?;
    let mut table = Table::new(config, vec!["n", "kl_mu_nu", "kl_nu_mu", "mass_defect"]);
    let mut sweep = SweepTable::new();
    for &n in &config.n_list {
        let (mu, _) = gibbs_pushforward(&a.model, n).with_context(|| format!("exact pushforward at N={n}"))?;
        let nu = mixture_pushforward(&a, n, &policy, &quad).with_context(|| format!("mixture at N={n}"))?;
        let (fwd, bwd) = (kl(&mu, &nu)?.value(), kl(&nu, &mu)?.value());
        table.row(vec![n.to_string(), f(fwd), f(bwd), f(nu.mass_defect())]);
        sweep.push(n, fwd, "kl_mu_nu")?;
        sweep.push(n, bwd, "kl_nu_mu")?;
    }
    table.fit_footer(&sweep, "kl_mu_nu");
    table.fit_footer(&sweep, "kl_nu_mu");
    Ok(table)
}

fn chaos(config: &ExperimentConfig) -> Result<Table> {
    let a = analysis(config)?;
    let policy = config.policy()?;
    let quad = config.quadrature()?;
    let mut table = Table::new(config, vec!["n", "k", "kl_mu_rho", "tv_mu_rho", "tv_mu_nu"]);
    let mut sweep = SweepTable::new();
    for &n in &config.n_list {
        let k = config.chaos.block(n);
        if k > n {
            bail!("block size k={k} exceeds N={n}");
        }
        let (mu, _) = gibbs_pushforward(&a.model, n).with_context(|| format!("exact pushforward at N={n}"))?;
        let nu = mixture_pushforward(&a, n, &policy, &quad).with_context(|| format!("mixture at N={n}"))?;
        let mu_k = marginal_counts(&mu, k)?;
        let nu_k = marginal_counts(&nu, k)?;
        let rho_k = product_baseline(&a, k)?;
        let kl_rho = kl(&mu_k, &rho_k)?.value();
        table.row(vec![
            n.to_string(),
            k.to_string(),
            f(kl_rho),
            f(tv(&mu_k, &rho_k)?),
            f(tv(&mu_k, &nu_k)?),
        ]);
        sweep.push(n, kl_rho, "kl_mu_rho")?;
    }
    table.fit_footer(&sweep, "kl_mu_rho");
    Ok(table)
}

fn critical(config: &ExperimentConfig) -> Result<Table> {
    let model = config.model_spec()?;
    if !model.is_critical_curie_weiss() {
        bail!("kind `critical` needs curie_weiss with beta = 1, h = 0");
    }
    let policy = config.policy()?;
    let quad = config.quadrature()?;
    let mut table = Table::new(
        config,
        vec!["n", "var_m_mu", "var_m_nu", "kl_mu_nu_crit", "z_ratio", "mass_defect"],
    );
    let mut sweep = SweepTable::new();
    for &n in &config.n_list {
        let (mu, lz) = gibbs_pushforward(&model, n).with_context(|| format!("exact pushforward at N={n}"))?;
        let nu = critical_cw_pushforward(n, &policy, &quad).with_context(|| format!("critical mixture at N={n}"))?;
        // m̃ = 1 − 2m̂
        let (vmu, vnu) = (4.0 * moments(&mu).1[(0, 0)], 4.0 * moments(&nu).1[(0, 0)]);
        let nf = n as f64;
        let ratio = (lz - nf * 2f64.ln() - 0.25 * nf.ln()).exp();
        table.row(vec![
            n.to_string(),
            f(vmu),
            f(vnu),
            f(kl(&mu, &nu)?.value()),
            f(ratio),
            f(nu.mass_defect()),
        ]);
        sweep.push(n, vmu, "var_m_mu")?;
        sweep.push(n, vnu, "var_m_nu")?;
    }
    table.fit_footer(&sweep, "var_m_mu");
    table.fit_footer(&sweep, "var_m_nu");
    Ok(table)
}

fn sample_check(config: &ExperimentConfig) -> Result<Table> {
    let a = analysis(config)?;
    let policy = config.policy()?;
    let quad = config.quadrature()?;
    let (count, alpha) = (config.sampling.samples, config.sampling.alpha);
    let mut table = Table::new(
        config,
        vec!["n", "sampler", "statistic", "dof", "p_value", "critical_value", "passed"],
    );
    for (i, &n) in config.n_list.iter().enumerate() {
        // distinct, reproducible streams per N and sampler
        let seed = config.seed.wrapping_add(2 * i as u64);
        let (mu, _) = gibbs_pushforward(&a.model, n).with_context(|| format!("exact pushforward at N={n}"))?;
        let gibbs = chi_square_gof(&sample_gibbs(&mu, seed, count), &mu, alpha)?;
        let nu = mixture_pushforward(&a, n, &policy, &quad).with_context(|| format!("mixture at N={n}"))?;
        let samples = sample_mixture(&a, n, &policy, seed + 1, count)?;
        let mixture = chi_square_gof(&samples, &nu, alpha)?;
        for (name, g) in [("gibbs", gibbs), ("mixture", mixture)] {
            table.row(vec![
                n.to_string(),
                name.to_string(),
                f(g.statistic),
                g.dof.to_string(),
                f(g.p_value),
                f(g.critical_value),
                g.passed.to_string(),
            ]);
        }
    }
    Ok(table)
}
