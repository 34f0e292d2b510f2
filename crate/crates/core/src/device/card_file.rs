use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{DeviceError, ModelCard, Polarity};
use crate::keyvalue::{KeyValueError, KeyValues};
use crate::units::{format_f64, format_length_nm};

pub const CARD_KEYS: &[&str] = &[
    "polarity",
    "lg",
    "wfin",
    "hfin",
    "nfin_unit",
    "vt0",
    "n_ss",
    "dibl",
    "k_gain",
    "theta_sat",
    "lambda_clm",
    "rs",
    "rd",
    "cov",
    "cch_max",
    "temp",
];

#[derive(Debug, Error)]
pub enum CardFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Syntax(#[from] KeyValueError),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("polarity must be `n` or `p`, got `{0}`")]
    Polarity(String),
    #[error(transparent)]
    Invalid(#[from] DeviceError),
}

/// Parses one card. Lengths are nanometres (`18`, `18n`) or suffixed SI (`0.018u`).
pub fn parse_card(text: &str) -> Result<ModelCard, CardFileError> {
    let kv = KeyValues::parse(text, CARD_KEYS)?;
    let defaults = ModelCard::reference();
    let polarity = match kv.raw("polarity") {
        None => Polarity::N,
        Some((_, v)) => match v.to_ascii_lowercase().as_str() {
            "n" | "nmos" => Polarity::N,
            "p" | "pmos" => Polarity::P,
            other => return Err(CardFileError::Polarity(other.to_string())),
        },
    };
    let need_len = |k: &'static str| kv.length_nm(k)?.ok_or(CardFileError::Missing(k));
    let need = |k: &'static str| kv.number(k)?.ok_or(CardFileError::Missing(k));
    let card = ModelCard {
        polarity,
        lg: need_len("lg")?,
        wfin: need_len("wfin")?,
        hfin: kv.length_nm("hfin")?.unwrap_or(defaults.hfin),
        nfin_unit: kv.count("nfin_unit")?.unwrap_or(1),
        vt0: need("vt0")?,
        n_ss: need("n_ss")?,
        dibl: kv.number("dibl")?.unwrap_or(0.0),
        k_gain: need("k_gain")?,
        theta_sat: kv.number("theta_sat")?.unwrap_or(0.0),
        lambda_clm: kv.number("lambda_clm")?.unwrap_or(0.0),
        rs: kv.number("rs")?.unwrap_or(0.0),
        rd: kv.number("rd")?.unwrap_or(0.0),
        cov: kv.number("cov")?.unwrap_or(0.0),
        cch_max: kv.number("cch_max")?.unwrap_or(0.0),
        temp: kv.number("temp")?.unwrap_or(defaults.temp),
    };
    card.validate()?;
    Ok(card)
}

pub fn read_card(path: &Path) -> Result<ModelCard, CardFileError> {
    let text = fs::read_to_string(path).map_err(|source| CardFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_card(&text)
}

/// Serializes every field; `parse_card(&write_card(c)) == c`.
pub fn write_card(card: &ModelCard) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    put("polarity", card.polarity.to_string());
    put("lg", format_length_nm(card.lg));
    put("wfin", format_length_nm(card.wfin));
    put("hfin", format_length_nm(card.hfin));
    put("nfin_unit", card.nfin_unit.to_string());
    put("vt0", format_f64(card.vt0));
    put("n_ss", format_f64(card.n_ss));
    put("dibl", format_f64(card.dibl));
    put("k_gain", format_f64(card.k_gain));
    put("theta_sat", format_f64(card.theta_sat));
    put("lambda_clm", format_f64(card.lambda_clm));
    put("rs", format_f64(card.rs));
    put("rd", format_f64(card.rd));
    put("cov", format_f64(card.cov));
    put("cch_max", format_f64(card.cch_max));
    put("temp", format_f64(card.temp));
    out
}
