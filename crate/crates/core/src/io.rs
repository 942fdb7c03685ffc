//! File formats and deterministic report emission.
//!
//! Reports are written from a `serde_json::Value` whose object keys are
//! sorted; every real is printed with 17 significant digits.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::correlation::CorrelationSeries;
use crate::error::{Error, Result};
use crate::mps::{euler_zyz, make_chain_with_tol, preset, BoundaryVector, CanonicalClassParams, MpsChain, Preset};
use crate::pauli::{KrausSet, Ket, Mat2};
use crate::sim::{MeasurementBasis, ProgramStep, Trace};

type Pair = [f64; 2];

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum MatrixRepr {
    Nested([[Pair; 2]; 2]),
    Flat([Pair; 4]),
}

impl MatrixRepr {
    fn to_mat2(&self) -> Mat2 {
        let c = |p: &Pair| C64::new(p[0], p[1]);
        match self {
            MatrixRepr::Nested(m) => Mat2::new_unchecked(c(&m[0][0]), c(&m[0][1]), c(&m[1][0]), c(&m[1][1])),
            MatrixRepr::Flat(m) => Mat2::new_unchecked(c(&m[0]), c(&m[1]), c(&m[2]), c(&m[3])),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMps {
    d: usize,
    n: usize,
    kraus: Vec<MatrixRepr>,
    left: [Pair; 2],
    right: [Pair; 2],
    #[serde(default)]
    label: Option<String>,
}

/// Contents of an MPS file before validation.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsFile {
    pub d: usize,
    pub n: usize,
    pub kraus: Vec<Mat2>,
    pub left: Ket,
    pub right: Ket,
    pub label: Option<String>,
}

fn ket(p: &[Pair; 2]) -> Ket {
    [C64::new(p[0][0], p[0][1]), C64::new(p[1][0], p[1][1])]
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn parse_mps_json(text: &str) -> Result<MpsFile> {
    let raw: RawMps = serde_json::from_str(text).map_err(parse_error)?;
    Ok(MpsFile {
        d: raw.d,
        n: raw.n,
        kraus: raw.kraus.iter().map(MatrixRepr::to_mat2).collect(),
        left: ket(&raw.left),
        right: ket(&raw.right),
        label: raw.label,
    })
}

impl MpsFile {
    /// Validate weights, boundaries and the CPTP conditions.
    pub fn to_chain(&self, tol: f64) -> Result<MpsChain> {
        if self.kraus.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: self.kraus.len() });
        }
        if self.kraus.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("Kraus operator"));
        }
        let k = KrausSet::new(self.kraus.clone())?;
        let left = BoundaryVector::new(self.left, tol)?;
        let right = BoundaryVector::new(self.right, tol)?;
        let chain = make_chain_with_tol(k, left, right, self.n, tol)?;
        Ok(match &self.label {
            Some(l) => chain.with_label(l.clone()),
            None => chain,
        })
    }
}

#[derive(Serialize)]
struct MpsOut<'a> {
    d: usize,
    n: usize,
    kraus: &'a [Mat2],
    left: &'a Ket,
    right: &'a Ket,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<&'a str>,
}

/// MPS file text; reals use the shortest representation that round-trips.
pub fn mps_to_json(chain: &MpsChain) -> String {
    let out = MpsOut {
        d: chain.d(),
        n: chain.n(),
        kraus: chain.kraus().ops(),
        left: chain.left().ket(),
        right: chain.right().ket(),
        label: chain.label(),
    };
    serde_json::to_string_pretty(&out).expect("MPS serialization is infallible")
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum BasisRepr {
    Nested(Vec<Vec<Pair>>),
    Flat(Vec<Pair>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    site: usize,
    basis: BasisRepr,
}

/// Parse `[{site, basis}, …]`; `basis` is a list of vectors of `[re, im]`
/// pairs or a flat row-major list of `d²` pairs.
pub fn parse_program_json(text: &str, tol: f64) -> Result<Vec<ProgramStep>> {
    let raw: Vec<RawStep> = serde_json::from_str(text).map_err(parse_error)?;
    raw.into_iter()
        .map(|step| {
            let c = |p: &Pair| C64::new(p[0], p[1]);
            let vectors: Vec<Vec<C64>> = match step.basis {
                BasisRepr::Nested(v) => v.iter().map(|row| row.iter().map(c).collect()).collect(),
                BasisRepr::Flat(v) => {
                    let d = (v.len() as f64).sqrt().round() as usize;
                    if d * d != v.len() {
                        return Err(Error::InvalidBasis(format!("{} entries is not a square count", v.len())));
                    }
                    v.chunks(d).map(|row| row.iter().map(c).collect()).collect()
                }
            };
            Ok(ProgramStep { site: step.site, basis: MeasurementBasis::new(vectors, tol)? })
        })
        .collect()
}

/// Parse a square matrix given as rows of `[re, im]` pairs.
pub fn parse_matrix_json(text: &str) -> Result<nalgebra::DMatrix<C64>> {
    let rows: Vec<Vec<Pair>> = serde_json::from_str(text).map_err(parse_error)?;
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Parse("matrix must be square and nonempty".into()));
    }
    Ok(nalgebra::DMatrix::from_fn(d, d, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

/// Serialize a non-finite real as the string `"inf"`, `"-inf"` or `"nan"`.
pub fn serialize_real<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&format_real(*x))
    }
}

pub fn serialize_reals<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        if x.is_finite() {
            seq.serialize_element(x)?;
        } else {
            seq.serialize_element(&format_real(*x))?;
        }
    }
    seq.end()
}

/// Real with 17 significant digits, or `inf`/`-inf`/`nan`.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn write_string(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"));
}

fn write_value(out: &mut String, v: &Value, indent: Option<usize>) {
    let newline = |out: &mut String, level: usize| {
        if let Some(_) = indent {
            out.push('\n');
            out.push_str(&"  ".repeat(level));
        }
    };
    let level = indent.unwrap_or(0);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&format_real(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => write_string(out, s),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            let scalar = items.iter().all(|x| !x.is_array() && !x.is_object());
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                    if scalar && indent.is_some() {
                        out.push(' ');
                    }
                }
                if !scalar {
                    newline(out, level + 1);
                }
                write_value(out, item, indent.map(|l| l + 1));
            }
            if !scalar {
                newline(out, level);
            }
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, level + 1);
                write_string(out, k);
                out.push(':');
                if indent.is_some() {
                    out.push(' ');
                }
                write_value(out, item, indent.map(|l| l + 1));
            }
            newline(out, level);
            out.push('}');
        }
    }
}

/// Deterministic JSON: sorted keys, 17-significant-digit reals.
pub fn to_json<T: Serialize>(value: &T, pretty: bool) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    let mut out = String::new();
    write_value(&mut out, &v, if pretty { Some(0) } else { None });
    Ok(out)
}

/// Columns `r, connected, bound, abs_connected` and a `# fitted_rate=` footer.
pub fn series_csv(series: &CorrelationSeries) -> String {
    let mut out = String::from("r,connected,bound,abs_connected\n");
    for ((r, c), b) in series.separations.iter().zip(&series.connected).zip(&series.bound) {
        out.push_str(&format!("{r},{},{},{}\n", format_real(*c), format_real(*b), format_real(c.abs())));
    }
    match series.fitted_rate {
        Some(rate) => out.push_str(&format!("# fitted_rate={}\n", format_real(rate))),
        None => out.push_str("# fitted_rate=none\n"),
    }
    out
}

#[derive(Serialize)]
struct FinalLine<'a> {
    kind: &'static str,
    shot: u64,
    cursor: usize,
    final_state: &'a Mat2,
}

#[derive(Serialize)]
struct RecordLine<'a> {
    kind: &'static str,
    shot: u64,
    #[serde(flatten)]
    record: &'a crate::sim::MeasurementRecord,
}

/// One JSON line per measurement and a closing line per shot.
pub fn traces_jsonl(traces: &[Trace]) -> Result<String> {
    let mut out = String::new();
    for t in traces {
        for r in &t.records {
            out.push_str(&to_json(&RecordLine { kind: "measurement", shot: t.shot, record: r }, false)?);
            out.push('\n');
        }
        out.push_str(&to_json(&FinalLine { kind: "final", shot: t.shot, cursor: t.cursor, final_state: &t.final_state }, false)?);
        out.push('\n');
    }
    Ok(out)
}

/// A preset together with its chain parameters, parsed from
/// `preset:NAME?n=..&left=..&right=..`.
#[derive(Clone, Debug, PartialEq)]
pub struct PresetSpec {
    pub preset: Preset,
    pub n: usize,
    pub left: BoundaryVector,
    pub right: BoundaryVector,
}

/// Chain length used when a preset query does not give `n`.
pub const DEFAULT_SITES: usize = 10;

impl PresetSpec {
    pub fn chain(&self) -> Result<MpsChain> {
        self.preset.chain(self.left, self.right, self.n)
    }
}

/// Parameters used for `canonical_class` when the query gives none.
pub fn default_canonical_params() -> CanonicalClassParams {
    CanonicalClassParams { theta0: std::f64::consts::PI / 5.0, c_m: 0.6, extra: vec![(0.4, 3, 0.4)] }
}

fn number(key: &str, v: &str) -> Result<f64> {
    v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("`{key}`: `{v}` is not a number")))
}

fn numbers(key: &str, v: &str, count: usize) -> Result<Vec<f64>> {
    let xs = v.split(',').map(|x| number(key, x)).collect::<Result<Vec<_>>>()?;
    if xs.len() != count {
        return Err(Error::Parse(format!("`{key}` expects {count} comma-separated numbers")));
    }
    Ok(xs)
}

/// Boundary names `0`, `1`, `+`, `-`, `+i`, `-i` or `bloch:θ,φ`.
pub fn parse_boundary(v: &str) -> Result<BoundaryVector> {
    Ok(match v {
        "0" => BoundaryVector::zero(),
        "1" => BoundaryVector::one(),
        "+" | "plus" => BoundaryVector::plus(),
        "-" | "minus" => BoundaryVector::minus(),
        "+i" | "plus_i" => BoundaryVector::plus_i(),
        "-i" | "minus_i" => BoundaryVector::minus_i(),
        other => match other.strip_prefix("bloch:") {
            Some(angles) => {
                let a = numbers("bloch", angles, 2)?;
                BoundaryVector::from_angles(a[0], a[1])
            }
            None => return Err(Error::Parse(format!("unknown boundary `{other}`"))),
        },
    })
}

fn pauli_index(v: &str) -> Result<usize> {
    match v.trim() {
        "I" | "0" => Ok(0),
        "X" | "1" => Ok(1),
        "Y" | "2" => Ok(2),
        "Z" | "3" => Ok(3),
        other => Err(Error::Parse(format!("unknown Pauli `{other}`"))),
    }
}

/// Parse `preset:NAME?key=value&…`. The `preset:` prefix is optional.
///
/// Keys: `n`, `left`, `right`; for `depolarizing4` the Euler angles
/// `u=a,b,c` and `v=a,b,c`; for `canonical_class` `theta0`, `cm` and
/// `extra=θ:B:c;…` with `B` in `I, X, Y, Z`.
pub fn parse_preset_spec(spec: &str) -> Result<PresetSpec> {
    let body = spec.strip_prefix("preset:").unwrap_or(spec);
    let (name, query) = match body.split_once('?') {
        Some((n, q)) => (n, q),
        None => (body, ""),
    };
    let mut n = None;
    let mut left = None;
    let mut right = None;
    let mut u = None;
    let mut v = None;
    let mut params: Option<CanonicalClassParams> = None;
    for pair in query.split('&').filter(|p| !p.is_empty()) {
        let (key, value) =
            pair.split_once('=').ok_or_else(|| Error::Parse(format!("`{pair}` is not key=value")))?;
        match key {
            "n" => n = Some(value.parse::<usize>().map_err(|_| Error::Parse(format!("`n`: `{value}` is not a count")))?),
            "left" => left = Some(parse_boundary(value)?),
            "right" => right = Some(parse_boundary(value)?),
            "u" | "v" => {
                let a = numbers(key, value, 3)?;
                let m = euler_zyz(a[0], a[1], a[2]);
                if key == "u" { u = Some(m) } else { v = Some(m) }
            }
            "theta0" => params.get_or_insert_with(default_canonical_params).theta0 = number(key, value)?,
            "cm" => params.get_or_insert_with(default_canonical_params).c_m = number(key, value)?,
            "extra" => {
                let extra = value
                    .split(';')
                    .map(|item| {
                        let parts: Vec<&str> = item.split(':').collect();
                        if parts.len() != 3 {
                            return Err(Error::Parse(format!("`extra` item `{item}` is not θ:B:c")));
                        }
                        Ok((number(key, parts[0])?, pauli_index(parts[1])?, number(key, parts[2])?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                params.get_or_insert_with(default_canonical_params).extra = extra;
            }
            other => return Err(Error::InvalidParams(format!("unknown preset parameter `{other}`"))),
        }
    }
    if name == "canonical_class" && params.is_none() {
        params = Some(default_canonical_params());
    }
    let uv = match (u, v) {
        (None, None) => None,
        (u, v) => Some((u.unwrap_or_else(Mat2::identity), v.unwrap_or_else(Mat2::identity))),
    };
    let preset = preset(name, params, uv)?;
    let (dl, dr) = preset.default_boundaries();
    let n = n.unwrap_or(DEFAULT_SITES);
    if n == 0 {
        return Err(Error::ZeroSites);
    }
    Ok(PresetSpec { preset, n, left: left.unwrap_or(dl), right: right.unwrap_or(dr) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mps_round_trip_is_bit_exact() {
        let u = crate::mps::euler_zyz(0.123456789, 1.1, -2.3);
        let chain = Preset::Depolarizing4 { u, v: crate::mps::euler_zyz(0.3, 0.2, 0.1) }
            .chain(BoundaryVector::from_angles(0.7, 1.9), BoundaryVector::plus_i(), 7)
            .unwrap();
        let text = mps_to_json(&chain);
        let file = parse_mps_json(&text).unwrap();
        let back = file.to_chain(1e-9).unwrap();
        assert_eq!(back.kraus().ops(), chain.kraus().ops());
        assert_eq!(back.left(), chain.left());
        assert_eq!(back.right(), chain.right());
        assert_eq!(back.label(), Some("depolarizing4"));
    }

    #[test]
    fn flat_matrices_accepted() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let text = format!(
            r#"{{"d":2,"n":3,"kraus":[[[{s},0],[0,0],[0,0],[{s},0]],[[{s},0],[0,0],[0,0],[-{s},0]]],"left":[[1,0],[0,0]],"right":[[1,0],[0,0]]}}"#
        );
        let chain = parse_mps_json(&text).unwrap().to_chain(1e-9).unwrap();
        assert_eq!(chain.n(), 3);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_mps_json("{\n  \"d\": 2,\n  \"n\": }").unwrap_err();
        let Error::Parse(msg) = err else { panic!("expected parse error") };
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn program_parsing() {
        let text = r#"[{"site": 2, "basis": [[[1,0],[0,0]],[[0,0],[1,0]]]},
                       {"site": 4, "basis": [[0.6,0],[0.8,0],[0.8,0],[-0.6,0]]}]"#;
        let p = parse_program_json(text, 1e-9).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].basis.vectors()[1][1], C64::new(-0.6, 0.0));
        let bad = r#"[{"site": 1, "basis": [[1,0],[1,0],[0,0],[1,0]]}]"#;
        assert!(matches!(parse_program_json(bad, 1e-9), Err(Error::InvalidBasis(_))));
    }

    #[test]
    fn json_is_sorted_and_full_precision() {
        #[derive(Serialize)]
        struct S {
            zeta: f64,
            alpha: u32,
            #[serde(serialize_with = "serialize_real")]
            inf: f64,
        }
        let text = to_json(&S { zeta: 0.1, alpha: 3, inf: f64::INFINITY }, false).unwrap();
        assert_eq!(text, r#"{"alpha":3,"inf":"inf","zeta":1.0000000000000001e-1}"#);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["zeta"].as_f64(), Some(0.1));
    }

    #[test]
    fn csv_layout() {
        let s = CorrelationSeries {
            k: 1,
            separations: vec![1, 2],
            connected: vec![-0.5, 0.25],
            bound: vec![1.0, f64::NAN],
            bound_terms: vec![],
            fitted_rate: None,
        };
        let csv = series_csv(&s);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "r,connected,bound,abs_connected");
        assert_eq!(lines[1], "1,-5.0000000000000000e-1,1.0000000000000000e0,5.0000000000000000e-1");
        assert_eq!(lines[2], "2,2.5000000000000000e-1,nan,2.5000000000000000e-1");
        assert_eq!(lines[3], "# fitted_rate=none");
    }

    #[test]
    fn preset_queries() {
        let p = parse_preset_spec("preset:ghz").unwrap();
        assert_eq!((p.n, p.left, p.right), (DEFAULT_SITES, BoundaryVector::plus(), BoundaryVector::zero()));
        let p = parse_preset_spec("preset:cluster?n=6&left=+i&right=bloch:1.0,0.5").unwrap();
        assert_eq!(p.n, 6);
        assert_eq!(p.left, BoundaryVector::plus_i());
        assert_eq!(p.right, BoundaryVector::from_angles(1.0, 0.5));
        let p = parse_preset_spec("canonical_class?theta0=0.2&cm=0.5&extra=0.1:X:0.3;0.4:Y:0.2").unwrap();
        assert_eq!(p.preset.kraus().unwrap().d(), 4);
        assert!(parse_preset_spec("preset:depolarizing4?u=0.1,0.2,0.3").unwrap().chain().is_ok());
        assert!(matches!(parse_preset_spec("preset:w"), Err(Error::UnknownPreset(_))));
        assert!(matches!(parse_preset_spec("preset:ghz?n=x"), Err(Error::Parse(_))));
        assert!(matches!(parse_preset_spec("preset:ghz?foo=1"), Err(Error::InvalidParams(_))));
        assert!(matches!(parse_preset_spec("preset:canonical_class?cm=0.9"), Err(Error::InvalidParams(_))));
    }
}
