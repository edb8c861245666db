//! TOML run configuration.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use cutcell::bench::cases::CaseParams;
use cutcell::bench::{BenchConfig, SpecOverrides};
use cutcell::conditions::{constant, from_expr, BoundaryCondition, Expr, InterfaceLaw, ScalarFn, Side};
use cutcell::solver::{DtRule, LinearSolver};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub levels: Option<usize>,
    pub full_scale: Option<bool>,
    pub parallel: Option<bool>,
    pub write_fields: Option<bool>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub bc: BcSection,
    pub interface: Option<InterfaceSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub theta: Option<f64>,
    pub t_final: Option<f64>,
    pub dt: Option<DtSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtSection {
    pub rule: String,
    /// Coefficient for `quadratic`/`linear`, step for `fixed`.
    pub value: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub lambda: Option<f64>,
    /// `[K⁻, K⁺]`.
    pub diffusivity: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub linear: Option<String>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcSection {
    pub west: Option<BcEntry>,
    pub east: Option<BcEntry>,
    pub south: Option<BcEntry>,
    pub north: Option<BcEntry>,
    pub bottom: Option<BcEntry>,
    pub top: Option<BcEntry>,
}

/// Either a number or an expression in `x, y, z, t`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcEntry {
    pub kind: String,
    pub value: Option<Scalar>,
    pub expr: Option<String>,
    pub beta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceSection {
    pub lambda: Option<f64>,
    pub f: Option<Scalar>,
}

fn scalar(s: &Scalar) -> Result<ScalarFn> {
    match s {
        Scalar::Number(v) => Ok(constant(*v)),
        Scalar::Text(t) => Ok(from_expr(Expr::parse(t).with_context(|| format!("in expression '{t}'"))?)),
    }
}

impl BcEntry {
    fn build(&self, side: &str) -> Result<BoundaryCondition> {
        let value = match (&self.value, &self.expr) {
            (Some(_), Some(_)) => bail!("bc.{side}: give either value or expr, not both"),
            (Some(v), None) => scalar(v)?,
            (None, Some(e)) => scalar(&Scalar::Text(e.clone()))?,
            (None, None) => constant(0.0),
        };
        let bc = match self.kind.as_str() {
            "dirichlet" => BoundaryCondition::dirichlet(value),
            "neumann" => BoundaryCondition::neumann(value),
            "robin" => {
                let beta = self.beta.ok_or_else(|| anyhow!("bc.{side}: robin needs beta"))?;
                BoundaryCondition::robin(beta, value)?
            }
            other => bail!("bc.{side}: unknown kind '{other}' (dirichlet, neumann, robin)"),
        };
        if self.beta.is_some() && self.kind != "robin" {
            bail!("bc.{side}: beta only applies to robin");
        }
        Ok(bc)
    }
}

fn dt_rule(d: &DtSection) -> Result<DtRule> {
    if !(d.value > 0.0) {
        bail!("time.dt.value must be positive");
    }
    Ok(match d.rule.as_str() {
        "fixed" => DtRule::Fixed(d.value),
        "quadratic" => DtRule::Quadratic(d.value),
        "linear" => DtRule::Linear(d.value),
        other => bail!("unknown time.dt.rule '{other}' (fixed, quadratic, linear)"),
    })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn into_bench(self) -> Result<BenchConfig> {
        let params = CaseParams {
            theta: self.time.theta,
            lambda: self.physics.lambda,
            diffusivity: self.physics.diffusivity,
            t_final: self.time.t_final,
            dt: self.time.dt.as_ref().map(dt_rule).transpose()?,
        };
        let solver = match self.solver.linear.as_deref() {
            None => None,
            Some("direct") => Some(LinearSolver::Direct),
            Some("iterative") => Some(LinearSolver::Iterative { max_iter: self.solver.max_iter.unwrap_or(2000) }),
            Some(other) => bail!("unknown solver.linear '{other}' (direct, iterative)"),
        };
        let mut overrides = SpecOverrides::default();
        let b = &self.bc;
        for (name, entry) in [("west", &b.west), ("east", &b.east), ("south", &b.south), ("north", &b.north), ("bottom", &b.bottom), ("top", &b.top)] {
            if let Some(e) = entry {
                let side = Side::from_name(name).expect("side names are fixed");
                overrides.bc.push((side, e.build(name)?));
            }
        }
        if let Some(i) = &self.interface {
            let f = i.f.as_ref().map(scalar).transpose()?.unwrap_or_else(|| constant(0.0));
            overrides.interface = Some(InterfaceLaw::new(i.lambda.unwrap_or(1.0), f)?);
        }
        Ok(BenchConfig {
            levels: self.levels,
            full_scale: self.full_scale.unwrap_or(false),
            params,
            out_dir: self.out,
            write_fields: self.write_fields.unwrap_or(false),
            parallel: self.parallel.unwrap_or(true),
            solver,
            overrides,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config_parses() {
        let cfg = RunConfig::parse(
            r#"
            levels = 3
            [time]
            theta = 0.5
            dt = { rule = "linear", value = 0.25 }
            [physics]
            diffusivity = [1.0, 2.0]
            [solver]
            linear = "iterative"
            [bc.west]
            kind = "dirichlet"
            expr = "erfc(x / (2 * sqrt(t)))"
            [bc.east]
            kind = "robin"
            value = 0.5
            beta = 2.0
            [interface]
            lambda = 2.0
            f = "0.1 * t"
            "#,
        )
        .unwrap();
        let b = cfg.into_bench().unwrap();
        assert_eq!(b.levels, Some(3));
        assert_eq!(b.params.dt, Some(DtRule::Linear(0.25)));
        assert_eq!(b.overrides.bc.len(), 2);
        let law = b.overrides.interface.unwrap();
        assert_eq!(law.lambda(), 2.0);
        assert!(((law.source)([0.0; 3], 2.0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn bad_entries_are_rejected() {
        for text in [
            "[bc.west]\nkind = \"robin\"\nvalue = 1.0",
            "[bc.west]\nkind = \"dirichlet\"\nbeta = 1.0",
            "[bc.west]\nkind = \"mixed\"",
            "[bc.west]\nkind = \"neumann\"\nexpr = \"x +\"",
            "[time]\ndt = { rule = \"cubic\", value = 1.0 }",
            "[interface]\nlambda = -1.0",
        ] {
            let parsed = RunConfig::parse(text).and_then(RunConfig::into_bench);
            assert!(parsed.is_err(), "accepted: {text}");
        }
        assert!(RunConfig::parse("unknown_key = 1").is_err());
    }
}
