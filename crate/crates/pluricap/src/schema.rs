//! JSON wire formats for the core types plus plot-ready CSV helpers.
//! Rationals travel as [num, den] pairs; floats are emitted with 17
//! significant digits so round-trips are bit-faithful.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremal::{EstimateMode, ExtremalEstimate, SolverDiagnostics};
use crate::qhpoly::{HoloQHPolynomial, MixedPolynomial, QHComponent};
use crate::series::{FormalSeries, RegionEstimate};
use crate::suspension::{SampledSet, SetDescriptor};
use crate::weights::{Exact, IrrationalBasis, Lambda, MultiIndex, RhoSequence};

// ---------------------------------------------------------------------------
// Lambda.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaJson {
    pub n: usize,
    /// Weights as [num, den] pairs when every weight is rational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rational: Option<Vec<[i64; 2]>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub irrational_basis: Vec<IrrationalBasis>,
    /// Per-weight coordinates over (1, tau_1, ..., tau_r) as [num, den].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<[i64; 2]>>>,
}

fn rat_to_pair(r: &BigRational) -> Result<[i64; 2]> {
    let num = r.numer().to_i64();
    let den = r.denom().to_i64();
    match (num, den) {
        (Some(n), Some(d)) => Ok([n, d]),
        _ => Err(Error::InvalidInput(
            "rational coordinate exceeds 64-bit range".into(),
        )),
    }
}

fn pair_to_rat(p: [i64; 2]) -> Result<BigRational> {
    if p[1] == 0 {
        return Err(Error::InvalidInput("zero denominator".into()));
    }
    Ok(BigRational::new(BigInt::from(p[0]), BigInt::from(p[1])))
}

pub fn lambda_to_json(lambda: &Lambda) -> Result<LambdaJson> {
    let all_rational = lambda.entries.iter().all(|e| e.is_rational());
    if all_rational && lambda.basis.is_empty() {
        let rational = lambda
            .entries
            .iter()
            .map(|e| rat_to_pair(&e.coords[0]))
            .collect::<Result<Vec<_>>>()?;
        Ok(LambdaJson {
            n: lambda.n,
            rational: Some(rational),
            irrational_basis: Vec::new(),
            coords: None,
        })
    } else {
        let coords = lambda
            .entries
            .iter()
            .map(|e| e.coords.iter().map(rat_to_pair).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(LambdaJson {
            n: lambda.n,
            rational: None,
            irrational_basis: lambda.basis.clone(),
            coords: Some(coords),
        })
    }
}

pub fn lambda_from_json(j: &LambdaJson) -> Result<Lambda> {
    if let Some(rational) = &j.rational {
        if rational.len() != j.n {
            return Err(Error::DimensionMismatch {
                expected: j.n,
                got: rational.len(),
            });
        }
        let pairs: Vec<(i64, i64)> = rational.iter().map(|p| (p[0], p[1])).collect();
        return Lambda::rational(&pairs);
    }
    let coords = j
        .coords
        .as_ref()
        .ok_or(Error::InvalidInput("lambda needs rational or coords".into()))?;
    if coords.len() != j.n {
        return Err(Error::DimensionMismatch {
            expected: j.n,
            got: coords.len(),
        });
    }
    let entries = coords
        .iter()
        .map(|row| {
            let cs = row
                .iter()
                .map(|&p| pair_to_rat(p))
                .collect::<Result<Vec<_>>>()?;
            Ok(Exact { coords: cs })
        })
        .collect::<Result<Vec<_>>>()?;
    Lambda::new(entries, j.irrational_basis.clone())
}

// ---------------------------------------------------------------------------
// Rho sequence.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoEntryJson {
    pub rho_approx: f64,
    pub rho_coords: Vec<[i64; 2]>,
    pub multiindices: Vec<Vec<u32>>,
}

pub fn rho_sequence_to_json(seq: &RhoSequence) -> Result<Vec<RhoEntryJson>> {
    seq.entries
        .iter()
        .map(|e| {
            Ok(RhoEntryJson {
                rho_approx: e.rho.approx,
                rho_coords: e
                    .rho
                    .exact
                    .coords
                    .iter()
                    .map(rat_to_pair)
                    .collect::<Result<Vec<_>>>()?,
                multiindices: e.multiindices.iter().map(|k| k.0.clone()).collect(),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Polynomials.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermJson {
    pub k: Vec<u32>,
    pub m: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub n: usize,
    pub terms: Vec<TermJson>,
}

pub fn poly_to_json(p: &MixedPolynomial) -> PolynomialJson {
    PolynomialJson {
        n: p.n,
        terms: p
            .terms()
            .map(|(k, m, c)| TermJson {
                k: k.0.clone(),
                m: m.0.clone(),
                re: c.re,
                im: c.im,
            })
            .collect(),
    }
}

pub fn poly_from_json(j: &PolynomialJson) -> Result<MixedPolynomial> {
    let mut p = MixedPolynomial::zero(j.n);
    for t in &j.terms {
        if t.k.len() != j.n || t.m.len() != j.n {
            return Err(Error::DimensionMismatch {
                expected: j.n,
                got: if t.k.len() != j.n { t.k.len() } else { t.m.len() },
            });
        }
        p.add_term(
            MultiIndex(t.k.clone()),
            MultiIndex(t.m.clone()),
            Complex64::new(t.re, t.im),
        );
    }
    Ok(p)
}

// ---------------------------------------------------------------------------
// Sampled sets.
// ---------------------------------------------------------------------------

/// A set file carries explicit points, a descriptor to sample, or both
/// (explicit points win).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetJson {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<SetDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

pub fn set_to_json(s: &SampledSet) -> SetJson {
    SetJson {
        n: s.n,
        points: Some(
            s.points
                .iter()
                .map(|p| p.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        ),
        descriptor: s.descriptor.clone(),
        count: None,
    }
}

pub fn set_from_json(j: &SetJson, default_count: usize, seed: u64) -> Result<SampledSet> {
    if let Some(points) = &j.points {
        let pts = points
            .iter()
            .map(|p| p.iter().map(|z| Complex64::new(z[0], z[1])).collect())
            .collect();
        let mut set = SampledSet::from_points(j.n, pts)?;
        set.descriptor = j.descriptor.clone();
        return Ok(set);
    }
    let descriptor = j
        .descriptor
        .as_ref()
        .ok_or(Error::InvalidInput("set needs points or descriptor".into()))?;
    SampledSet::sample(descriptor, j.count.unwrap_or(default_count), seed)
}

// ---------------------------------------------------------------------------
// Estimates.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeJson {
    SampleEstimate,
    CertifiedLower { mesh: f64, grad_bound: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsJson {
    pub pivots: usize,
    pub lp_solves: usize,
    pub cuts: usize,
    pub status: String,
    pub box_active: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateJson {
    pub value: f64,
    pub level: f64,
    pub mode: ModeJson,
    pub witness: PolynomialJson,
    pub diagnostics: DiagnosticsJson,
}

pub fn estimate_to_json(est: &ExtremalEstimate) -> EstimateJson {
    let mode = match est.mode {
        EstimateMode::SampleEstimate => ModeJson::SampleEstimate,
        EstimateMode::CertifiedLower { mesh, grad_bound } => {
            ModeJson::CertifiedLower { mesh, grad_bound }
        }
    };
    let SolverDiagnostics {
        pivots,
        lp_solves,
        cuts,
        ref status,
        box_active,
    } = est.diagnostics;
    EstimateJson {
        value: est.value,
        level: est.level,
        mode,
        witness: poly_to_json(&est.witness),
        diagnostics: DiagnosticsJson {
            pivots,
            lp_solves,
            cuts,
            status: status.clone(),
            box_active,
        },
    }
}

// ---------------------------------------------------------------------------
// Formal series.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockJson {
    pub rho_coords: Vec<[i64; 2]>,
    pub poly: PolynomialJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormalSeriesJson {
    pub lambda: LambdaJson,
    pub blocks: Vec<BlockJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
}

pub fn series_to_json(s: &FormalSeries) -> Result<FormalSeriesJson> {
    Ok(FormalSeriesJson {
        lambda: lambda_to_json(&s.lambda)?,
        blocks: s
            .blocks
            .iter()
            .map(|(rho, q)| {
                Ok(BlockJson {
                    rho_coords: rho
                        .exact
                        .coords
                        .iter()
                        .map(rat_to_pair)
                        .collect::<Result<Vec<_>>>()?,
                    poly: poly_to_json(q.poly()),
                })
            })
            .collect::<Result<Vec<_>>>()?,
        truncation: Some(s.truncation),
    })
}

pub fn series_from_json(j: &FormalSeriesJson) -> Result<FormalSeries> {
    let lambda = lambda_from_json(&j.lambda)?;
    let blocks = j
        .blocks
        .iter()
        .map(|b| {
            let coords = b
                .rho_coords
                .iter()
                .map(|&p| pair_to_rat(p))
                .collect::<Result<Vec<_>>>()?;
            if coords.len() != lambda.basis.len() + 1 {
                return Err(Error::DimensionMismatch {
                    expected: lambda.basis.len() + 1,
                    got: coords.len(),
                });
            }
            let rho = lambda.degree_from_exact(Exact { coords });
            HoloQHPolynomial::new(QHComponent {
                poly: poly_from_json(&b.poly)?,
                d1: rho,
                d2: lambda.zero_degree(),
                lambda: lambda.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = FormalSeries::new(lambda, blocks)?;
    if let Some(m) = j.truncation {
        s.truncation = m;
    }
    Ok(s)
}

// ---------------------------------------------------------------------------
// CSV.
// ---------------------------------------------------------------------------

/// 17 significant digits: enough to reconstruct any f64 exactly.
pub fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn point_cells(p: &[Complex64]) -> Vec<String> {
    p.iter()
        .flat_map(|z| [csv_float(z.re), csv_float(z.im)])
        .collect()
}

fn point_header(n: usize) -> Vec<String> {
    (1..=n)
        .flat_map(|i| [format!("re_z{i}"), format!("im_z{i}")])
        .collect()
}

/// Grid-sweep CSV: point coordinates then one column per named value.
pub fn sweep_csv(names: &[&str], rows: &[(Vec<Complex64>, Vec<f64>)]) -> String {
    let n = rows.first().map(|(p, _)| p.len()).unwrap_or(0);
    let mut header = point_header(n);
    header.extend(names.iter().map(|s| s.to_string()));
    let mut out = header.join(",");
    out.push('\n');
    for (p, vals) in rows {
        let mut cells = point_cells(p);
        cells.extend(vals.iter().map(|&v| csv_float(v)));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// RegionEstimate CSV: point coords, value, inside flag.
pub fn region_csv(est: &RegionEstimate) -> String {
    let n = est.grid.first().map(|p| p.len()).unwrap_or(0);
    let mut header = point_header(n);
    header.push("value".into());
    header.push("inside".into());
    let mut out = header.join(",");
    out.push('\n');
    for ((p, &v), &inside) in est.grid.iter().zip(&est.values).zip(&est.inside) {
        let mut cells = point_cells(p);
        cells.push(csv_float(v));
        cells.push(if inside { "1".into() } else { "0".into() });
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
