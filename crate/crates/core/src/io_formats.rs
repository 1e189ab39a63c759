//! Binary and text formats for coefficients, sample sequences, rules,
//! decomposition bundles and error maps. All binary data is little-endian.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter_bank::FilterBank;
use crate::needlet_transform::{ArgConvention, LevelScheme, NeedletDecomposition};
use crate::sphere_geom::{QuadratureRule, RuleKind, SpherePoint};
use crate::vsh::{TangentSampleSeq, Vec3, VectorCoeffPair};

pub const FORMAT_VERSION: u8 = 1;
pub const COEFF_MAGIC: &[u8; 4] = b"TNVC";
pub const SEQ_MAGIC: &[u8; 4] = b"TNVS";
/// `(div.re, div.im, curl.re, curl.im)` per `(ℓ, m)`.
pub const LAYOUT_INTERLEAVED: u8 = 0;
pub const MANIFEST_NAME: &str = "manifest.json";

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Truncated(what.to_string()),
        _ => Error::Io(e),
    })
}

fn read_u8<R: Read>(r: &mut R, what: &str) -> Result<u8> {
    let mut b = [0u8; 1];
    read_exact_or(r, &mut b, what)?;
    Ok(b[0])
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact_or(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize, what: &str) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    read_exact_or(r, &mut buf, what)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn expect_eof<R: Read>(r: &mut R, what: &str) -> Result<()> {
    let mut b = [0u8; 1];
    match r.read(&mut b)? {
        0 => Ok(()),
        _ => Err(Error::Format(format!("{what}: trailing bytes after payload"))),
    }
}

fn check_header<R: Read>(r: &mut R, magic: &[u8; 4], what: &str) -> Result<()> {
    let mut m = [0u8; 4];
    read_exact_or(r, &mut m, what)?;
    if &m != magic {
        return Err(Error::Format(format!("{what}: bad magic {m:?}")));
    }
    let v = read_u8(r, what)?;
    if v != FORMAT_VERSION {
        return Err(Error::Version {
            found: v,
            expected: FORMAT_VERSION,
        });
    }
    Ok(())
}

pub fn write_coeffs<W: Write>(w: &mut W, c: &VectorCoeffPair) -> Result<()> {
    w.write_all(COEFF_MAGIC)?;
    w.write_all(&[FORMAT_VERSION, LAYOUT_INTERLEAVED])?;
    w.write_all(&(c.l_max() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(c.div().len() * 32);
    for (d, q) in c.div().iter().zip(c.curl()) {
        for x in [d.re, d.im, q.re, q.im] {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_coeffs<R: Read>(r: &mut R) -> Result<VectorCoeffPair> {
    check_header(r, COEFF_MAGIC, "coefficient file")?;
    let layout = read_u8(r, "coefficient file")?;
    if layout != LAYOUT_INTERLEAVED {
        return Err(Error::Format(format!("coefficient file: unknown layout {layout}")));
    }
    let l = read_u32(r, "coefficient file")? as usize;
    if l > 1 << 16 {
        return Err(Error::Format(format!("coefficient file: implausible bandlimit {l}")));
    }
    let n = VectorCoeffPair::family_len(l);
    let raw = read_f64s(r, 4 * n, "coefficient payload")?;
    expect_eof(r, "coefficient file")?;
    let mut div = Vec::with_capacity(n);
    let mut curl = Vec::with_capacity(n);
    for q in raw.chunks_exact(4) {
        div.push(C64::new(q[0], q[1]));
        curl.push(C64::new(q[2], q[3]));
    }
    VectorCoeffPair::from_parts(l, div, curl)
}

fn kind_code(k: RuleKind) -> (u8, u32) {
    match k {
        RuleKind::GaussLegendre { level } => (0, level),
        RuleKind::SphericalDesign => (1, 0),
    }
}

/// Writes the weighted values of a sequence plus its rule identity.
pub fn write_sequence<W: Write>(w: &mut W, s: &TangentSampleSeq) -> Result<()> {
    let (code, level) = kind_code(s.rule().kind());
    w.write_all(SEQ_MAGIC)?;
    w.write_all(&[FORMAT_VERSION, code])?;
    w.write_all(&level.to_le_bytes())?;
    w.write_all(&(s.len() as u64).to_le_bytes())?;
    w.write_all(&(s.bandlimit() as u32).to_le_bytes())?;
    w.write_all(&[u8::from(s.is_certified())])?;
    let mut buf = Vec::with_capacity(s.len() * 48);
    for v in s.values() {
        for z in v {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a sequence that must live on `rule`.
pub fn read_sequence<R: Read>(r: &mut R, rule: Arc<QuadratureRule>) -> Result<TangentSampleSeq> {
    check_header(r, SEQ_MAGIC, "sequence file")?;
    let code = read_u8(r, "sequence file")?;
    let level = read_u32(r, "sequence file")?;
    let n = read_u64(r, "sequence file")? as usize;
    let bandlimit = read_u32(r, "sequence file")? as usize;
    let certified = read_u8(r, "sequence file")? != 0;
    if (code, level) != kind_code(rule.kind()) {
        return Err(Error::Config("sequence file was written for a different rule".into()));
    }
    if n != rule.len() {
        return Err(Error::Shape {
            expected: rule.len(),
            got: n,
        });
    }
    let raw = read_f64s(r, n * 6, "sequence payload")?;
    expect_eof(r, "sequence file")?;
    let values = raw
        .chunks_exact(6)
        .map(|q| [C64::new(q[0], q[1]), C64::new(q[2], q[3]), C64::new(q[4], q[5])])
        .collect();
    TangentSampleSeq::new(rule, values, bandlimit, certified)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn save_coeffs(path: &Path, c: &VectorCoeffPair) -> Result<()> {
    let mut w = create(path)?;
    write_coeffs(&mut w, c)?;
    w.flush()?;
    Ok(())
}

pub fn load_coeffs(path: &Path) -> Result<VectorCoeffPair> {
    read_coeffs(&mut open(path)?)
}

pub fn save_sequence(path: &Path, s: &TangentSampleSeq) -> Result<()> {
    let mut w = create(path)?;
    write_sequence(&mut w, s)?;
    w.flush()?;
    Ok(())
}

pub fn load_sequence(path: &Path, rule: Arc<QuadratureRule>) -> Result<TangentSampleSeq> {
    read_sequence(&mut open(path)?, rule)
}

/// Text export: `# degree t` then `x y z w` per node.
pub fn save_rule(path: &Path, rule: &QuadratureRule) -> Result<()> {
    fs::write(path, rule.to_export_string())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleEntry {
    pub level: u32,
    pub kind: String,
    pub nodes: usize,
    pub exactness: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetailEntry {
    pub level: u32,
    pub channel: usize,
    pub sequence: String,
    pub mirror: Option<String>,
}

/// `manifest.json` of a decomposition bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u8,
    pub bank: String,
    pub coarse_level: u32,
    pub fine_level: u32,
    pub convention: String,
    pub rules: Vec<RuleEntry>,
    pub approx: String,
    pub approx_mirror: Option<String>,
    pub details: Vec<DetailEntry>,
}

impl Manifest {
    pub fn convention(&self) -> Result<ArgConvention> {
        ArgConvention::parse(&self.convention)
    }

    fn check_scheme(&self, scheme: &LevelScheme) -> Result<()> {
        let mismatch = |what: &str| Error::Config(format!("bundle {what} does not match the requested scheme"));
        if self.coarse_level != scheme.coarsest() || self.fine_level != scheme.finest() {
            return Err(mismatch("levels"));
        }
        if self.convention()? != scheme.convention() {
            return Err(mismatch("convention"));
        }
        let expect: Vec<RuleEntry> = (scheme.coarsest()..=scheme.finest()).map(|j| rule_entry(j, scheme.rule(j))).collect();
        if self.rules != expect {
            return Err(mismatch("rules"));
        }
        Ok(())
    }
}

fn rule_entry(level: u32, r: &QuadratureRule) -> RuleEntry {
    RuleEntry {
        level,
        kind: r.kind().label().to_string(),
        nodes: r.len(),
        exactness: r.exactness_degree(),
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Format(format!("manifest: {e}")))?;
    if m.format_version != FORMAT_VERSION {
        return Err(Error::Version {
            found: m.format_version,
            expected: FORMAT_VERSION,
        });
    }
    Ok(m)
}

/// Writes a decomposition into `dir` (created if needed).
pub fn write_bundle(dir: &Path, d: &NeedletDecomposition, scheme: &LevelScheme) -> Result<Manifest> {
    if *d.signature() != scheme.signature() {
        return Err(Error::Config("decomposition does not belong to this scheme".into()));
    }
    fs::create_dir_all(dir)?;
    save_sequence(&dir.join("approx.tnvs"), d.approx())?;
    let approx_mirror = match d.approx_coeffs() {
        Some(c) => {
            save_coeffs(&dir.join("approx.tnvc"), c)?;
            Some("approx.tnvc".to_string())
        }
        None => None,
    };
    let mut details = Vec::new();
    for (i, lvl) in d.details().iter().enumerate() {
        let level = scheme.coarsest() + i as u32;
        for (k, s) in lvl.iter().enumerate() {
            let n = k + 1;
            let seq_name = format!("detail_{level}_{n}.tnvs");
            save_sequence(&dir.join(&seq_name), s)?;
            let mirror = match d.detail_coeffs() {
                Some(dc) => {
                    let name = format!("detail_{level}_{n}.tnvc");
                    save_coeffs(&dir.join(&name), &dc[i][k])?;
                    Some(name)
                }
                None => None,
            };
            details.push(DetailEntry {
                level,
                channel: n,
                sequence: seq_name,
                mirror,
            });
        }
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        bank: d.bank_id().to_string(),
        coarse_level: scheme.coarsest(),
        fine_level: scheme.finest(),
        convention: scheme.convention().label().to_string(),
        rules: (scheme.coarsest()..=scheme.finest()).map(|j| rule_entry(j, scheme.rule(j))).collect(),
        approx: "approx.tnvs".into(),
        approx_mirror,
        details,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join(MANIFEST_NAME), json)?;
    Ok(manifest)
}

type Slot = (TangentSampleSeq, Option<VectorCoeffPair>);

/// Reads a bundle written for `scheme`. Returns the decomposition and the
/// bank named in the manifest.
pub fn read_bundle(dir: &Path, scheme: &LevelScheme) -> Result<(NeedletDecomposition, FilterBank)> {
    let m = read_manifest(dir)?;
    let bank = FilterBank::by_id(&m.bank)?;
    m.check_scheme(scheme)?;
    let approx = load_sequence(&dir.join(&m.approx), scheme.rule(scheme.coarsest()).clone())?;
    let levels = (scheme.finest() - scheme.coarsest()) as usize;
    let mut details: Vec<Vec<Option<Slot>>> =
        (0..levels).map(|_| vec![None; bank.channels()]).collect();
    for e in &m.details {
        if e.level < scheme.coarsest() || e.level >= scheme.finest() || e.channel == 0 || e.channel > bank.channels() {
            return Err(Error::Format(format!("manifest lists an unexpected detail ({}, {})", e.level, e.channel)));
        }
        let rule = scheme.rule(e.level + 1).clone();
        let seq = load_sequence(&dir.join(&e.sequence), rule)?;
        let mirror = e.mirror.as_ref().map(|f| load_coeffs(&dir.join(f))).transpose()?;
        details[(e.level - scheme.coarsest()) as usize][e.channel - 1] = Some((seq, mirror));
    }
    let mut seqs = Vec::with_capacity(levels);
    let mut mirrors = Vec::with_capacity(levels);
    let mut all_mirrors = m.approx_mirror.is_some();
    for (i, lvl) in details.into_iter().enumerate() {
        let mut s_lvl = Vec::new();
        let mut m_lvl = Vec::new();
        for (k, slot) in lvl.into_iter().enumerate() {
            let (s, mc) = slot.ok_or_else(|| {
                Error::Format(format!("manifest is missing detail ({}, {})", scheme.coarsest() + i as u32, k + 1))
            })?;
            s_lvl.push(s);
            match mc {
                Some(c) => m_lvl.push(c),
                None => all_mirrors = false,
            }
        }
        seqs.push(s_lvl);
        mirrors.push(m_lvl);
    }
    let mut d = NeedletDecomposition::from_parts(scheme, m.bank.clone(), approx, seqs)?;
    if all_mirrors {
        let a = load_coeffs(&dir.join(m.approx_mirror.as_ref().unwrap()))?;
        d = d.with_mirrors(a, mirrors)?;
    }
    Ok((d, bank))
}

/// Per-node CSV `x,y,z,Tx,Ty,Tz,Ex,Ey,Ez` with `E = T - T_rec` (real parts).
pub fn write_error_map<W: Write>(w: &mut W, points: &[SpherePoint], truth: &[Vec3], rec: &[Vec3]) -> Result<()> {
    if truth.len() != points.len() || rec.len() != points.len() {
        return Err(Error::Shape {
            expected: points.len(),
            got: truth.len().min(rec.len()),
        });
    }
    writeln!(w, "x,y,z,Tx,Ty,Tz,Ex,Ey,Ez")?;
    for ((p, t), r) in points.iter().zip(truth).zip(rec) {
        let [x, y, z] = p.xyz();
        let e = [t[0] - r[0], t[1] - r[1], t[2] - r[2]];
        writeln!(
            w,
            "{x:e},{y:e},{z:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            t[0].re, t[1].re, t[2].re, e[0].re, e[1].re, e[2].re
        )?;
    }
    Ok(())
}

/// Rows of an error map as `[f64; 9]`.
pub fn read_error_map<R: Read>(r: R) -> Result<Vec<[f64; 9]>> {
    let mut rdr = csv::Reader::from_reader(r);
    let h = rdr.headers().map_err(|e| Error::Format(e.to_string()))?;
    if h.iter().collect::<Vec<_>>().join(",") != "x,y,z,Tx,Ty,Tz,Ex,Ey,Ez" {
        return Err(Error::Format("unexpected error-map header".into()));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let mut row = [0.0; 9];
        for (k, f) in rec.iter().enumerate().take(9) {
            row[k] = f.parse().map_err(|_| Error::Format(format!("bad number `{f}`")))?;
        }
        out.push(row);
    }
    Ok(out)
}
