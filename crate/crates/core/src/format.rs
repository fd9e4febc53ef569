//! Line-oriented text format for trees and ensembles.
//!
//! ```text
//! obliquebart v1
//! config trees=2 alpha=... beta=... tau=... nu=... lambda=... a_theta=... b_theta=... p_cont=2 levels=3,2 mode=oblique prob_cat=-
//! state sigma2=... theta=...
//! tree D 2 <c> <phi_1> <phi_2> L <mu> K 0 {0,2} L <mu> L <mu>
//! tree L <mu>
//! ```
//!
//! Tree lines list nodes in pre-order. `D p c phi_1..phi_p` is a continuous
//! rule, `K j {levels}` a categorical rule on predictor `j` (0-based), and
//! `L mu` a leaf (`L -` when the output is unset). Reals are written with 17
//! significant digits so values round-trip exactly.

use std::fmt::Write as _;

use crate::ensemble::{Ensemble, EnsembleConfig, RuleMode};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tree::{DecisionRule, DecisionTree, LevelSet, NodeKind, PreorderNode, Schema};

pub const ENSEMBLE_HEADER: &str = "obliquebart v1";

/// Formats a real with 17 significant digits.
pub fn fmt_real<T: Real>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

pub(crate) fn parse_real<T: Real>(token: &str, line: usize) -> Result<T> {
    let v: f64 = token.parse().map_err(|_| Error::Parse {
        line,
        reason: format!("'{token}' is not a number"),
    })?;
    T::from_f64(v).ok_or_else(|| Error::Parse {
        line,
        reason: format!("'{token}' is not representable"),
    })
}

fn parse_usize(token: &str, line: usize) -> Result<usize> {
    token.parse().map_err(|_| Error::Parse {
        line,
        reason: format!("'{token}' is not a non-negative integer"),
    })
}

pub fn tree_to_line<T: Real>(tree: &DecisionTree<T>) -> String {
    let mut out = String::from("tree");
    for id in tree.preorder() {
        match &tree.node(id).expect("preorder yields live ids").kind {
            NodeKind::Leaf { output: Some(mu) } => {
                let _ = write!(out, " L {}", fmt_real(*mu));
            }
            NodeKind::Leaf { output: None } => out.push_str(" L -"),
            NodeKind::Decision { rule, .. } => match rule {
                DecisionRule::Continuous { phi, cutpoint } => {
                    let _ = write!(out, " D {} {}", phi.len(), fmt_real(*cutpoint));
                    for v in phi {
                        let _ = write!(out, " {}", fmt_real(*v));
                    }
                }
                DecisionRule::Categorical { predictor, levels } => {
                    let list: Vec<String> = levels.iter().map(u32::to_string).collect();
                    let _ = write!(out, " K {predictor} {{{}}}", list.join(","));
                }
            },
        }
    }
    out
}

pub fn tree_from_line<T: Real>(text: &str, line: usize) -> Result<DecisionTree<T>> {
    let mut tokens = text.split_whitespace();
    if tokens.next() != Some("tree") {
        return Err(Error::Parse {
            line,
            reason: "expected a 'tree' record".into(),
        });
    }
    let eof = || Error::Parse {
        line,
        reason: "truncated node record".into(),
    };
    let mut nodes = Vec::new();
    while let Some(tag) = tokens.next() {
        match tag {
            "L" => {
                let v = tokens.next().ok_or_else(eof)?;
                let output = if v == "-" { None } else { Some(parse_real(v, line)?) };
                nodes.push(PreorderNode::Leaf(output));
            }
            "D" => {
                let p = parse_usize(tokens.next().ok_or_else(eof)?, line)?;
                let cutpoint = parse_real(tokens.next().ok_or_else(eof)?, line)?;
                let phi = (0..p)
                    .map(|_| parse_real(tokens.next().ok_or_else(eof)?, line))
                    .collect::<Result<Vec<T>>>()?;
                let rule = DecisionRule::continuous(phi, cutpoint).map_err(|e| Error::Parse {
                    line,
                    reason: e.to_string(),
                })?;
                nodes.push(PreorderNode::Decision(rule));
            }
            "K" => {
                let predictor = parse_usize(tokens.next().ok_or_else(eof)?, line)?;
                let set = tokens.next().ok_or_else(eof)?;
                let inner = set
                    .strip_prefix('{')
                    .and_then(|s| s.strip_suffix('}'))
                    .ok_or_else(|| Error::Parse {
                        line,
                        reason: format!("level set '{set}' must be written as {{a,b,...}}"),
                    })?;
                let levels = inner
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_usize(s, line).map(|v| v as u32))
                    .collect::<Result<LevelSet>>()?;
                nodes.push(PreorderNode::Decision(DecisionRule::categorical(predictor, levels)));
            }
            other => {
                return Err(Error::Parse {
                    line,
                    reason: format!("unknown node tag '{other}'"),
                })
            }
        }
    }
    DecisionTree::from_preorder(nodes).map_err(|e| match e {
        Error::Parse { reason, .. } => Error::Parse { line, reason },
        e => e,
    })
}

fn config_line<T: Real>(c: &EnsembleConfig<T>) -> String {
    let levels: Vec<String> = c.schema.level_counts.iter().map(u32::to_string).collect();
    format!(
        "config trees={} alpha={} beta={} tau={} nu={} lambda={} a_theta={} b_theta={} p_cont={} levels={} mode={} prob_cat={}",
        c.num_trees,
        fmt_real(c.alpha),
        fmt_real(c.beta),
        fmt_real(c.tau),
        fmt_real(c.nu),
        fmt_real(c.lambda),
        fmt_real(c.a_theta),
        fmt_real(c.b_theta),
        c.schema.p_cont,
        if levels.is_empty() { "-".to_string() } else { levels.join(",") },
        c.mode.as_str(),
        c.prob_categorical.map_or_else(|| "-".to_string(), fmt_real),
    )
}

fn key_values(text: &str, tag: &str, line: usize) -> Result<Vec<(String, String)>> {
    let mut tokens = text.split_whitespace();
    if tokens.next() != Some(tag) {
        return Err(Error::Parse {
            line,
            reason: format!("expected a '{tag}' record"),
        });
    }
    tokens
        .map(|t| {
            t.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Parse {
                    line,
                    reason: format!("expected key=value, got '{t}'"),
                })
        })
        .collect()
}

fn lookup<'a>(kv: &'a [(String, String)], key: &str, line: usize) -> Result<&'a str> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::Parse {
            line,
            reason: format!("missing field '{key}'"),
        })
}

fn parse_config<T: Real>(text: &str, line: usize) -> Result<EnsembleConfig<T>> {
    let kv = key_values(text, "config", line)?;
    let real = |key: &str| -> Result<T> { parse_real(lookup(&kv, key, line)?, line) };
    let levels = lookup(&kv, "levels", line)?;
    let level_counts = if levels == "-" {
        Vec::new()
    } else {
        levels
            .split(',')
            .map(|s| parse_usize(s, line).map(|v| v as u32))
            .collect::<Result<Vec<u32>>>()?
    };
    let prob_cat = lookup(&kv, "prob_cat", line)?;
    let config = EnsembleConfig {
        num_trees: parse_usize(lookup(&kv, "trees", line)?, line)?,
        alpha: real("alpha")?,
        beta: real("beta")?,
        tau: real("tau")?,
        nu: real("nu")?,
        lambda: real("lambda")?,
        a_theta: real("a_theta")?,
        b_theta: real("b_theta")?,
        schema: Schema::new(parse_usize(lookup(&kv, "p_cont", line)?, line)?, level_counts),
        mode: lookup(&kv, "mode", line)?.parse::<RuleMode>()?,
        prob_categorical: if prob_cat == "-" { None } else { Some(parse_real(prob_cat, line)?) },
    };
    config.validate().map_err(|e| Error::Parse {
        line,
        reason: e.to_string(),
    })?;
    Ok(config)
}

pub fn write_ensemble<T: Real>(out: &mut String, ens: &Ensemble<T>) {
    out.push_str(ENSEMBLE_HEADER);
    out.push('\n');
    out.push_str(&config_line(&ens.config));
    out.push('\n');
    let _ = writeln!(out, "state sigma2={} theta={}", fmt_real(ens.sigma2), fmt_real(ens.theta));
    for tree in &ens.trees {
        out.push_str(&tree_to_line(tree));
        out.push('\n');
    }
}

pub fn ensemble_to_string<T: Real>(ens: &Ensemble<T>) -> String {
    let mut out = String::new();
    write_ensemble(&mut out, ens);
    out
}

/// Cursor over numbered, non-empty lines.
pub(crate) struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        let iter: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim_end()))
                .filter(|(_, l)| !l.is_empty()),
        );
        Self { inner: iter.peekable() }
    }

    pub(crate) fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.inner.next().ok_or_else(|| Error::Parse {
            line: 0,
            reason: format!("unexpected end of input, expected {what}"),
        })
    }

    pub(crate) fn is_done(&mut self) -> bool {
        self.inner.peek().is_none()
    }
}

pub(crate) fn parse_ensemble<T: Real>(lines: &mut Lines<'_>) -> Result<Ensemble<T>> {
    let (n, header) = lines.next_line("header")?;
    if header != ENSEMBLE_HEADER {
        return Err(Error::Parse {
            line: n,
            reason: format!("expected header '{ENSEMBLE_HEADER}'"),
        });
    }
    let (n, text) = lines.next_line("config line")?;
    let config = parse_config::<T>(text, n)?;
    let (n, text) = lines.next_line("state line")?;
    let kv = key_values(text, "state", n)?;
    let sigma2 = parse_real(lookup(&kv, "sigma2", n)?, n)?;
    let theta = parse_real(lookup(&kv, "theta", n)?, n)?;
    let trees = (0..config.num_trees)
        .map(|_| {
            let (n, text) = lines.next_line("tree line")?;
            tree_from_line(text, n)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        trees,
        sigma2,
        theta,
        config,
    })
}

pub fn ensemble_from_str<T: Real>(text: &str) -> Result<Ensemble<T>> {
    let mut lines = Lines::new(text);
    let ens = parse_ensemble(&mut lines)?;
    if !lines.is_done() {
        let (line, _) = lines.next_line("")?;
        return Err(Error::Parse {
            line,
            reason: "trailing content after the last tree".into(),
        });
    }
    Ok(ens)
}
