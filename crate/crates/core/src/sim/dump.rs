use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::CsiMode;
use super::trial::Simulator;
use super::SimError;
use crate::channel::NoiseSpec;
use crate::gf2::Gf2Matrix;
use crate::ofdm::OfdmError;
use crate::pnc::{pnc_encode, superimpose, MappingCatalog, SourceWord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationRow {
    pub ap: usize,
    pub word: u8,
    pub ue1: u8,
    pub ue2: u8,
    pub re: f64,
    pub im: f64,
    pub ncv: u8,
}

/// Superimposed 16-point constellation at one AP, labeled with the NCVs of
/// the half of the combined mapping that AP uses.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationDump {
    pub ap: usize,
    pub h: [Complex64; 2],
    pub sfs: usize,
    pub mapping_index: usize,
    pub mapping: Gf2Matrix,
    pub clusters: usize,
    pub rows: Vec<ConstellationRow>,
}

impl ConstellationDump {
    pub fn ncv_classes(&self) -> usize {
        let mut seen = [false; 4];
        for r in &self.rows {
            seen[usize::from(r.ncv)] = true;
        }
        seen.iter().filter(|&&b| b).count()
    }
}

pub fn write_constellation_csv<W: Write>(
    out: W,
    dumps: &[ConstellationDump],
) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for r in dumps.iter().flat_map(|d| &d.rows) {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Both APs' constellations for gains `gains[ap − 1] = (h_j1, h_j2)`,
/// labeled under the mapping the hub selects for their nearest SFSs.
pub fn constellation_dump(
    gains: [[Complex64; 2]; 2],
    cat: &MappingCatalog,
) -> Result<[ConstellationDump; 2], SimError> {
    let mut sfs = [0; 2];
    for (s, h) in sfs.iter_mut().zip(&gains) {
        if h[0].norm() < crate::ofdm::DEGENERATE_GAIN {
            return Err(OfdmError::DegenerateChannel(h[0].norm()).into());
        }
        *s = cat.sfs().nearest(h[1] / h[0]);
    }
    let entry = cat.entry(sfs[0], sfs[1])?;
    let one = |ap: usize| -> Result<ConstellationDump, SimError> {
        let h = gains[ap - 1];
        let mapping = entry.half(ap);
        let sc = superimpose(h, cat.constellation());
        let rows = SourceWord::all()
            .map(|w| {
                let p = sc.point(w);
                Ok(ConstellationRow {
                    ap,
                    word: w.value(),
                    ue1: w.ue1(),
                    ue2: w.ue2(),
                    re: p.re,
                    im: p.im,
                    ncv: pnc_encode(&mapping, w)?.value(),
                })
            })
            .collect::<Result<_, SimError>>()?;
        Ok(ConstellationDump {
            ap,
            h,
            sfs: sfs[ap - 1],
            mapping_index: entry.mapping_index(),
            mapping,
            clusters: sc.distinct_points(cat.tolerance()),
            rows,
        })
    };
    Ok([one(1)?, one(2)?])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDumpRow {
    pub carrier: usize,
    pub est_h1_re: f64,
    pub est_h1_im: f64,
    pub est_h2_re: f64,
    pub est_h2_im: f64,
    pub true_h1_re: f64,
    pub true_h1_im: f64,
    pub true_h2_re: f64,
    pub true_h2_im: f64,
}

/// Estimated and true per-carrier channels at AP `ap` (1 or 2) for trial
/// `trial` at `ebno_db`.
pub fn channel_dump(
    sim: &Simulator,
    ebno_db: f64,
    trial: u64,
    ap: usize,
) -> Result<Vec<ChannelDumpRow>, SimError> {
    if ap != 1 && ap != 2 {
        return Err(SimError::Config(format!("ap must be 1 or 2, got {ap}")));
    }
    let mut rng = sim.trial_rng(trial);
    let draw = sim.draw(&mut rng);
    let frames = sim.tx_frames(&draw)?;
    let noise = NoiseSpec::new(ebno_db);
    let mut rx = Vec::new();
    for k in 0..ap {
        // keep the noise stream aligned with the trial
        rx = sim.receive(&frames, &draw, k, Some(&noise), &mut rng)?;
    }
    let links = &draw.links[ap - 1];
    let view = sim
        .process_ap(&rx, links, CsiMode::Estimated)?
        .ok_or(OfdmError::NotFound(f64::NAN))?;
    let truth = sim.true_csi(links);
    let used = crate::ofdm::PilotMap::used_carriers();
    Ok(used
        .into_iter()
        .map(|k| {
            let (e1, e2) = (view.csi.at(1, k), view.csi.at(2, k));
            let (t1, t2) = (truth.at(1, k), truth.at(2, k));
            ChannelDumpRow {
                carrier: k,
                est_h1_re: e1.re,
                est_h1_im: e1.im,
                est_h2_re: e2.re,
                est_h2_im: e2.im,
                true_h1_re: t1.re,
                true_h1_im: t1.im,
                true_h2_re: t2.re,
                true_h2_im: t2.im,
            }
        })
        .collect())
}

pub fn write_channel_csv<W: Write>(out: W, rows: &[ChannelDumpRow]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pnc::{offline_search, Qam4, DEFAULT_TOLERANCE};
    use crate::sim::SimConfig;

    fn cat() -> MappingCatalog {
        offline_search(&Qam4::gray(), DEFAULT_TOLERANCE)
            .unwrap()
            .catalog
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cluster_geometry_per_sfs() {
        let cat = cat();
        let generic = [c(1.0, 0.0), c(0.3, 0.9)];
        // (ratio, sfs, distinct points)
        let cases = [
            (c(-0.5, -0.5), 2, 12),
            (c(-1.0, -1.0), 5, 12),
            (c(1.0, 0.0), 4, 9),
            (c(0.0, -1.0), 3, 9),
            (c(0.0, 0.0), 1, 4),
        ];
        for (r, sfs, clusters) in cases {
            let [_, d] = constellation_dump([generic, [c(1.0, 0.0), r]], &cat).unwrap();
            assert_eq!((d.sfs, d.clusters), (sfs, clusters), "ratio {r}");
            assert_eq!(d.rows.len(), 16);
        }
        let [d, _] = constellation_dump([generic, generic], &cat).unwrap();
        assert_eq!(d.clusters, 16);
    }

    #[test]
    fn logged_experiment_case() {
        // AP1 sees h12/h11 = −i, AP2 sees only UE1
        let cat = cat();
        let [a1, a2] = constellation_dump(
            [[c(1.0, 0.0), c(0.0, -1.0)], [c(0.7, 0.2), c(0.0, 0.0)]],
            &cat,
        )
        .unwrap();
        assert_eq!((a1.sfs, a2.sfs, a1.mapping_index), (3, 1, 11));
        assert_eq!(a2.rows.len(), 16);
        assert_eq!(a2.ncv_classes(), 4);
        let mut buf = Vec::new();
        write_constellation_csv(&mut buf, &[a1, a2]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("ap,word,ue1,ue2,re,im,ncv\n"));
        assert_eq!(text.lines().count(), 33);
    }

    #[test]
    fn coincident_points_share_an_ncv_when_resolved() {
        let cat = cat();
        for &v in cat.sfs().values() {
            let g = [c(1.0, 0.0), v];
            let [d, _] = constellation_dump([g, g], &cat).unwrap();
            for a in &d.rows {
                for b in &d.rows {
                    if (a.re - b.re).abs() < 1e-9 && (a.im - b.im).abs() < 1e-9 {
                        assert_eq!(a.ncv, b.ncv, "sfs {}", d.sfs);
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_h1_rejected() {
        let g = [c(1.0, 0.0), c(1.0, 0.0)];
        assert!(constellation_dump([[c(0.0, 0.0), c(1.0, 0.0)], g], &cat()).is_err());
    }

    #[test]
    fn channel_dump_tracks_truth_at_high_snr() {
        let sim = Simulator::new(SimConfig::default()).unwrap();
        let rows = channel_dump(&sim, 50.0, 2, 2).unwrap();
        assert_eq!(rows.len(), 48);
        for r in &rows {
            let e = Complex64::new(r.est_h1_re - r.true_h1_re, r.est_h1_im - r.true_h1_im).norm();
            let t = Complex64::new(r.true_h1_re, r.true_h1_im).norm();
            assert!(e < 0.05 * t.max(0.1), "carrier {}", r.carrier);
        }
        let mut buf = Vec::new();
        write_channel_csv(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 49);
    }
}
