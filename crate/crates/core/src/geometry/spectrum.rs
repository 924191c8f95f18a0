use std::f64::consts::TAU;

use rayon::prelude::*;

use super::classes::{enumerate_classes_within, geodesic_from_class, Chord, ClosedGeodesic};
use super::surface::SurfaceGroup;
use crate::error::Result;

const SAME_LENGTH: f64 = 1e-7;
const SAME_LINE: f64 = 1e-7;

/// A primitive closed geodesic together with its passages through the
/// fundamental polygon.
#[derive(Clone, Debug)]
pub struct SpectrumEntry {
    pub geodesic: ClosedGeodesic,
    pub chords: Vec<Chord>,
    /// Shortest enumerated word representing this geodesic.
    pub min_word_len: usize,
}

impl SpectrumEntry {
    pub fn length(&self) -> f64 {
        self.geodesic.length
    }

    fn longest_chord(&self) -> &Chord {
        self.chords
            .iter()
            .max_by(|a, b| a.duration.total_cmp(&b.duration))
            .expect("closed geodesic crosses the polygon")
    }

    fn has_line(&self, line: (f64, f64)) -> bool {
        self.chords.iter().any(|c| same_line(c.line, line))
    }

    /// A k-fold iterate runs through each of its chords k times.
    fn is_primitive(&self) -> bool {
        let l = self.longest_chord().line;
        self.chords.iter().filter(|c| same_line(c.line, l)).count() == 1
    }
}

fn same_line(a: (f64, f64), b: (f64, f64)) -> bool {
    let close = |x: f64, y: f64| {
        let d = (x - y).rem_euclid(TAU);
        d.min(TAU - d) < SAME_LINE
    };
    (close(a.0, b.0) && close(a.1, b.1)) || (close(a.0, b.1) && close(a.1, b.0))
}

/// Primitive closed geodesics reachable by words of length at most
/// `max_word_len`, each listed once, sorted by length.
#[derive(Clone, Debug)]
pub struct LengthSpectrum {
    pub max_word_len: usize,
    pub max_length: f64,
    pub entries: Vec<SpectrumEntry>,
}

impl LengthSpectrum {
    /// Enumerate, trace and deduplicate. Distinct words for the same curve
    /// (e.g. differing by the relator) are merged geometrically: two
    /// entries coincide when their lengths agree and the longest chord of
    /// one is a chord of the other.
    pub fn compute(group: &SurfaceGroup, max_word_len: usize, max_length: f64) -> Result<Self> {
        let classes = enumerate_classes_within(group, max_word_len, max_length);
        let mut traced = classes
            .par_iter()
            .map(|c| {
                let geodesic = geodesic_from_class(group, c)?;
                let chords = geodesic.chords(group)?;
                Ok(SpectrumEntry { min_word_len: c.word.len(), geodesic, chords })
            })
            .collect::<Result<Vec<_>>>()?;
        traced.sort_by(|a, b| {
            a.length()
                .total_cmp(&b.length())
                .then_with(|| a.geodesic.class.word.len().cmp(&b.geodesic.class.word.len()))
                .then_with(|| a.geodesic.class.word.cmp(&b.geodesic.class.word))
        });

        let mut unique: Vec<SpectrumEntry> = Vec::new();
        let mut window = 0;
        for item in traced {
            while window < unique.len() && unique[window].length() < item.length() - SAME_LENGTH {
                window += 1;
            }
            let line = item.longest_chord().line;
            let found = (window..unique.len())
                .find(|&k| (unique[k].length() - item.length()).abs() < SAME_LENGTH && unique[k].has_line(line));
            match found {
                Some(k) => unique[k].min_word_len = unique[k].min_word_len.min(item.min_word_len),
                None => unique.push(item),
            }
        }
        unique.retain(SpectrumEntry::is_primitive);
        Ok(Self { max_word_len, max_length, entries: unique })
    }

    /// Number of primitive geodesics of length at most `t`.
    pub fn count(&self, t: f64) -> usize {
        self.entries.partition_point(|e| e.length() <= t)
    }

    /// Number of those already reachable with words one letter shorter.
    pub fn count_shorter_words(&self, t: f64) -> usize {
        self.entries[..self.count(t)]
            .iter()
            .filter(|e| e.min_word_len < self.max_word_len)
            .count()
    }

    /// Largest length up to which dropping the longest words loses at most
    /// the fraction `deficit` of the count at every length. Beyond it the
    /// enumeration is visibly incomplete.
    pub fn complete_up_to(&self, deficit: f64) -> f64 {
        let mut shorter = 0usize;
        let mut last_ok = 0.0;
        for (i, e) in self.entries.iter().enumerate() {
            if e.min_word_len < self.max_word_len {
                shorter += 1;
            }
            let total = i + 1;
            // only judge once all entries of this length are in
            let next_same = self.entries.get(i + 1).is_some_and(|n| n.length() - e.length() < SAME_LENGTH);
            if next_same {
                continue;
            }
            if (shorter as f64) < (1.0 - deficit) * total as f64 {
                return last_ok;
            }
            last_ok = e.length();
        }
        last_ok.min(self.max_length)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_systoles() {
        let g = SurfaceGroup::bolza().unwrap();
        let s = LengthSpectrum::compute(&g, 4, 5.0).unwrap();
        assert_eq!(s.count(3.1), 12);
        for e in &s.entries[..12] {
            assert!((e.length() - 3.057141838961996).abs() < 1e-9);
        }
    }

    #[test]
    fn counts_stable_in_word_length() {
        let g = SurfaceGroup::bolza().unwrap();
        let s6 = LengthSpectrum::compute(&g, 6, 8.0).unwrap();
        let s7 = LengthSpectrum::compute(&g, 7, 8.0).unwrap();
        assert!(s7.count(8.0) >= s6.count(8.0));
        assert_eq!(s6.count(5.5), s7.count(5.5));
        let t = s7.complete_up_to(0.05);
        assert!(t > 5.0 && t <= 8.0, "{t}");
    }
}
