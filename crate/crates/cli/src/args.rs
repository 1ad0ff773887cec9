use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use logsym::kernels::{FamilyTag, KernelFamily};

use crate::output::Format;

fn family_tag(s: &str) -> std::result::Result<FamilyTag, String> {
    s.parse::<FamilyTag>().map_err(|e| e.to_string())
}

/// Flags every subcommand accepts.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file; stdout when absent. Side tables are written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Kernel family and a single extra parameter.
#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    /// log-no, log-t, log-pe, log-hp, log-sl, log-cn, ebs or ebs-t.
    #[arg(long, value_parser = family_tag, default_value = "log-no")]
    pub family: FamilyTag,
    /// Extra parameter; components of two-parameter families separated by `:`.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
}

/// Kernel grid and quantile levels for commands that fit data.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Profile grid, e.g. `1,2,3` or `0.1:0.2,0.3:0.5`.
    #[arg(long, conflicts_with = "theta", allow_hyphen_values = true)]
    pub theta_grid: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    /// Several quantile levels, comma separated; overrides `--q`.
    #[arg(long, value_delimiter = ',', conflicts_with = "q")]
    pub q_grid: Option<Vec<f64>>,
}

/// Columns of the input CSV.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Quantile predictors; an intercept is always added.
    #[arg(long, value_delimiter = ',')]
    pub quantile_covars: Vec<String>,
    /// Dispersion predictors; an intercept is always added.
    #[arg(long, value_delimiter = ',')]
    pub dispersion_covars: Vec<String>,
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(':')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .with_context(|| format!("cannot parse `{c}` in extra parameter `{s}`"))
        })
        .collect()
}

fn family_at(tag: FamilyTag, s: &str) -> Result<KernelFamily> {
    Ok(KernelFamily::new(tag, &parse_point(s)?)?)
}

impl FamilyArgs {
    /// `--theta` if given, otherwise the study default of the family.
    pub fn single(&self) -> Result<KernelFamily> {
        match &self.theta {
            Some(t) => family_at(self.family, t),
            None => Ok(KernelFamily::study_default(self.family)),
        }
    }
}

impl ModelArgs {
    /// The grid to profile: `--theta`, `--theta-grid`, or the family's default grid.
    pub fn grid(&self) -> Result<Vec<KernelFamily>> {
        let tag = self.family.family;
        if tag.extra_len() == 0 && (self.family.theta.is_some() || self.theta_grid.is_some()) {
            bail!("{tag} has no extra parameter");
        }
        match (&self.family.theta, &self.theta_grid) {
            (Some(t), _) => Ok(vec![family_at(tag, t)?]),
            (None, Some(g)) => {
                let grid = g.split(',').map(|p| family_at(tag, p)).collect::<Result<Vec<_>>>()?;
                if grid.is_empty() {
                    bail!("empty --theta-grid");
                }
                Ok(grid)
            }
            (None, None) => Ok(KernelFamily::default_grid(tag)),
        }
    }

    pub fn levels(&self) -> Result<Vec<f64>> {
        let qs = self.q_grid.clone().unwrap_or_else(|| vec![self.q]);
        if qs.is_empty() {
            bail!("empty --q-grid");
        }
        if let Some(q) = qs.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            bail!("quantile level {q} is outside (0, 1)");
        }
        Ok(qs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(tag: FamilyTag, theta: Option<&str>, grid: Option<&str>) -> ModelArgs {
        ModelArgs {
            family: FamilyArgs {
                family: tag,
                theta: theta.map(str::to_string),
            },
            theta_grid: grid.map(str::to_string),
            q: 0.5,
            q_grid: None,
        }
    }

    #[test]
    fn grids_parse() {
        let g = model(FamilyTag::LogCn, None, Some("0.1:0.2, 0.3:0.4")).grid().unwrap();
        assert_eq!(
            g[1],
            KernelFamily::LogCn {
                weight: 0.3,
                precision: 0.4
            }
        );
        assert_eq!(
            model(FamilyTag::LogT, Some("4"), None).grid().unwrap(),
            vec![KernelFamily::LogT { nu: 4.0 }]
        );
        assert_eq!(model(FamilyTag::LogT, None, None).grid().unwrap().len(), 10);
        assert_eq!(
            model(FamilyTag::LogPe, Some("-0.5"), None).grid().unwrap(),
            vec![KernelFamily::LogPe { shape: -0.5 }]
        );
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(model(FamilyTag::LogNo, Some("3"), None).grid().is_err());
        assert!(model(FamilyTag::LogT, Some("-1"), None).grid().is_err());
        assert!(model(FamilyTag::LogCn, Some("0.1"), None).grid().is_err());
        assert!(model(FamilyTag::LogT, None, Some("3,x")).grid().is_err());
    }

    #[test]
    fn levels_must_be_probabilities() {
        let mut m = model(FamilyTag::LogNo, None, None);
        assert_eq!(m.levels().unwrap(), vec![0.5]);
        m.q_grid = Some(vec![0.1, 1.0]);
        assert!(m.levels().is_err());
    }
}
