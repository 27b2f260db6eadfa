//! Text persistence of trained networks.
//!
//! A model file has a header `mlp d0 d1 ... dk` followed, per layer, by one
//! line of row-major weights and one line of biases, each value written with
//! 17 significant digits so that reading reproduces the binary64 value.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fem::CoefficientModel;
use crate::mesh::build_hierarchy;
use crate::neural::{Layer, Mlp};
use crate::sampling::SampleSpec;
use crate::surrogate::{GlobalSurrogate, LocalSurrogate};
use crate::LOCAL_COARSE_DOFS;

pub const MANIFEST_NAME: &str = "manifest.txt";

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn model_file_name(id: usize) -> String {
    format!("subdomain_{id}.model")
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::ModelFormat {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn join_values(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(" ")
}

pub fn mlp_to_text(net: &Mlp) -> String {
    let dims: Vec<String> = net.dims().iter().map(|d| d.to_string()).collect();
    let mut s = format!("mlp {}\n", dims.join(" "));
    for layer in net.layers() {
        let _ = writeln!(s, "{}", join_values(&layer.weights));
        let _ = writeln!(s, "{}", join_values(&layer.bias));
    }
    s
}

/// `path` is only used for error messages.
pub fn mlp_from_text(text: &str, path: &Path) -> Result<Mlp> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| format_err(path, "empty file"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("mlp") {
        return Err(format_err(path, "missing 'mlp' header"));
    }
    let dims = fields
        .map(|d| d.parse::<usize>().map_err(|_| format_err(path, format!("bad dimension '{d}'"))))
        .collect::<Result<Vec<_>>>()?;
    if dims.len() < 2 || dims.contains(&0) {
        return Err(format_err(path, "need at least two positive dimensions"));
    }
    let mut read_line = |expected: usize, what: &str| -> Result<Vec<f64>> {
        let line = lines
            .next()
            .ok_or_else(|| format_err(path, format!("missing {what} line")))?;
        let values = line
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|_| format_err(path, format!("bad number '{v}'"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != expected {
            return Err(format_err(
                path,
                format!("{what} line has {} values, expected {expected}", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(format_err(path, format!("non-finite value in {what} line")));
        }
        Ok(values)
    };
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for w in dims.windows(2) {
        let weights = read_line(w[0] * w[1], "weight")?;
        let bias = read_line(w[1], "bias")?;
        layers.push(Layer {
            inputs: w[0],
            outputs: w[1],
            weights,
            bias,
        });
    }
    if lines.next().is_some() {
        return Err(format_err(path, "trailing data after last layer"));
    }
    Mlp::from_layers(layers)
}

pub fn save_mlp(path: &Path, net: &Mlp) -> Result<()> {
    std::fs::write(path, mlp_to_text(net)).map_err(|e| Error::io(path, e))
}

pub fn load_mlp(path: &Path) -> Result<Mlp> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    mlp_from_text(&text, path)
}

/// Grid, coefficient and sampling parameters a set of model files was trained for.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub subdomains_per_side: usize,
    pub ratio: usize,
    pub coefficient: CoefficientModel,
    pub spec: SampleSpec,
    pub training_seed: u64,
    pub subdomain_ids: Vec<usize>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let ids: Vec<String> = self.subdomain_ids.iter().map(|i| i.to_string()).collect();
        format!(
            "subdomains_per_side = {}\nratio = {}\ncoefficient = {}\nbox_half_width = {}\n\
             ball_radius = {}\nbox_draws = {}\nball_draws = {}\ntraining_seed = {}\nsubdomains = {}\n",
            self.subdomains_per_side,
            self.ratio,
            self.coefficient,
            fmt_f64(self.spec.box_half_width),
            fmt_f64(self.spec.ball_radius),
            self.spec.box_draws,
            self.spec.ball_draws,
            self.training_seed,
            ids.join(","),
        )
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut get = std::collections::BTreeMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format_err(path, format!("bad manifest line '{line}'")))?;
            get.insert(k.trim().to_string(), v.trim().to_string());
        }
        let field = |k: &str| -> Result<&str> {
            get.get(k)
                .map(String::as_str)
                .ok_or_else(|| format_err(path, format!("manifest lacks '{k}'")))
        };
        fn num<T: std::str::FromStr>(path: &Path, k: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| format_err(path, format!("bad value '{v}' for '{k}'")))
        }
        let ids = field("subdomains")?
            .split(',')
            .map(|v| num(path, "subdomains", v.trim()))
            .collect::<Result<Vec<usize>>>()?;
        let spec = SampleSpec::new(
            num(path, "box_half_width", field("box_half_width")?)?,
            num(path, "ball_radius", field("ball_radius")?)?,
            num(path, "box_draws", field("box_draws")?)?,
            num(path, "ball_draws", field("ball_draws")?)?,
        )
        .map_err(|e| format_err(path, e.to_string()))?;
        Ok(Self {
            subdomains_per_side: num(path, "subdomains_per_side", field("subdomains_per_side")?)?,
            ratio: num(path, "ratio", field("ratio")?)?,
            coefficient: field("coefficient")?
                .parse()
                .map_err(|e: Error| format_err(path, e.to_string()))?,
            spec,
            training_seed: num(path, "training_seed", field("training_seed")?)?,
            subdomain_ids: ids,
        })
    }
}

/// Writes one model file per subdomain plus the manifest into `dir`.
pub fn save_surrogate(dir: &Path, manifest: &Manifest, surrogate: &GlobalSurrogate) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(surrogate.locals.len() + 1);
    for local in &surrogate.locals {
        let path = dir.join(model_file_name(local.subdomain_id));
        save_mlp(&path, &local.net)?;
        written.push(path);
    }
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}

/// Loads the models in `dir` and checks that they were trained for the given
/// grid and coefficient.
pub fn load_surrogate(
    dir: &Path,
    subdomains_per_side: usize,
    ratio: usize,
    coefficient: CoefficientModel,
) -> Result<(Manifest, GlobalSurrogate)> {
    let mpath = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest = Manifest::parse(&text, &mpath)?;
    if manifest.subdomains_per_side != subdomains_per_side || manifest.ratio != ratio {
        return Err(Error::InvalidConfig(format!(
            "models in {} were trained for {} subdomains per side with ratio {}, not {} with ratio {}",
            dir.display(),
            manifest.subdomains_per_side,
            manifest.ratio,
            subdomains_per_side,
            ratio
        )));
    }
    if manifest.coefficient != coefficient {
        return Err(Error::InvalidConfig(format!(
            "models in {} were trained for coefficient {}, not {}",
            dir.display(),
            manifest.coefficient,
            coefficient
        )));
    }
    let (_, subs) = build_hierarchy(subdomains_per_side, ratio)?;
    let locals = manifest
        .subdomain_ids
        .iter()
        .map(|&id| {
            Ok(LocalSurrogate {
                subdomain_id: id,
                net: load_mlp(&dir.join(model_file_name(id)))?,
                spec: manifest.spec,
                box_center: [0.0; LOCAL_COARSE_DOFS],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let surrogate = GlobalSurrogate::new(locals, subs)?;
    Ok((manifest, surrogate))
}
