use super::disk::{exact_geodesic_flow, from_origin, rotate_quarter, to_origin, PhasePoint, C64};
use super::isometry::Isometry;
use super::surface::SurfaceGroup;
use crate::error::{Error, Result};

/// Word in the generators; letter `j` stands for generator `j`.
pub type Word = Vec<u8>;

/// A hyperbolic conjugacy class represented by its canonical word.
#[derive(Clone, Debug, PartialEq)]
pub struct ConjugacyClass {
    pub word: Word,
    pub matrix: Isometry,
    pub trace_abs: f64,
}

impl ConjugacyClass {
    pub fn from_word(group: &SurfaceGroup, word: &[u8]) -> Self {
        let matrix = group.word_isometry(word);
        Self { word: canonical_word(word), matrix, trace_abs: matrix.trace().abs() }
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.trace_abs > 2.0
    }

    /// Translation length `2·arccosh(|tr|/2)`.
    pub fn length(&self) -> f64 {
        2.0 * (0.5 * self.trace_abs).acosh()
    }

    /// Word as a dot-separated string, e.g. `0.3.6`.
    pub fn label(&self) -> String {
        word_label(&self.word)
    }
}

pub fn word_label(word: &[u8]) -> String {
    word.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(".")
}

fn inverse_word(word: &[u8]) -> Word {
    word.iter().rev().map(|&j| SurfaceGroup::inverse_letter(j)).collect()
}

fn is_cyclically_reduced(word: &[u8]) -> bool {
    let n = word.len();
    n > 0 && (0..n).all(|i| SurfaceGroup::inverse_letter(word[i]) != word[(i + 1) % n])
}

/// Lexicographic minimum over cyclic rotations of the word and of its inverse.
pub fn canonical_word(word: &[u8]) -> Word {
    let inv = inverse_word(word);
    let n = word.len();
    let mut best: Word = word.to_vec();
    for w in [word, inv.as_slice()] {
        for r in 0..n {
            if rotation_less(w, r, &best) {
                best = w[r..].iter().chain(&w[..r]).copied().collect();
            }
        }
    }
    best
}

fn rotation_less(w: &[u8], r: usize, than: &[u8]) -> bool {
    let n = w.len();
    for i in 0..n {
        let a = w[(r + i) % n];
        let b = than[i];
        if a != b {
            return a < b;
        }
    }
    false
}

fn is_canonical(word: &[u8], scratch: &mut Word) -> bool {
    let n = word.len();
    for r in 1..n {
        if rotation_less(word, r, word) {
            return false;
        }
    }
    scratch.clear();
    scratch.extend(word.iter().rev().map(|&j| SurfaceGroup::inverse_letter(j)));
    (0..n).all(|r| !rotation_less(scratch, r, word))
}

/// All hyperbolic conjugacy classes having a cyclically reduced representative
/// of length at most `max_len`, deduplicated under rotation and inversion.
///
/// Classes are ordered by word length, then lexicographically.
pub fn enumerate_classes(group: &SurfaceGroup, max_len: usize) -> Vec<ConjugacyClass> {
    enumerate_classes_within(group, max_len, f64::INFINITY)
}

/// Like [`enumerate_classes`], keeping only classes of translation length at
/// most `max_length`.
pub fn enumerate_classes_within(group: &SurfaceGroup, max_len: usize, max_length: f64) -> Vec<ConjugacyClass> {
    let max_trace = if max_length.is_finite() { 2.0 * (0.5 * max_length).cosh() } else { f64::INFINITY };
    let mut out = Vec::new();
    let mut word: Word = Vec::with_capacity(max_len);
    let mut prefix: Vec<Isometry> = vec![Isometry::identity()];
    let mut scratch = Vec::with_capacity(max_len);
    for len in 1..=max_len {
        visit(group, len, max_trace, &mut word, &mut prefix, &mut scratch, &mut out);
    }
    out
}

fn visit(
    group: &SurfaceGroup,
    len: usize,
    max_trace: f64,
    word: &mut Word,
    prefix: &mut Vec<Isometry>,
    scratch: &mut Word,
    out: &mut Vec<ConjugacyClass>,
) {
    if word.len() == len {
        if is_cyclically_reduced(word) && is_canonical(word, scratch) {
            let matrix = prefix.last().expect("prefix stack").renormalized();
            let trace_abs = matrix.trace().abs();
            if trace_abs > 2.0 + 1e-9 && trace_abs <= max_trace {
                out.push(ConjugacyClass { word: word.clone(), matrix, trace_abs });
            }
        }
        return;
    }
    // a canonical word starts with its smallest letter
    let first = word.first().copied();
    for j in 0..8u8 {
        if let Some(&last) = word.last() {
            if j == SurfaceGroup::inverse_letter(last) {
                continue;
            }
        }
        if let Some(f) = first {
            if j < f {
                continue;
            }
        }
        let next = prefix.last().expect("prefix stack").compose(group.generator(j));
        word.push(j);
        prefix.push(next);
        visit(group, len, max_trace, word, prefix, scratch, out);
        word.pop();
        prefix.pop();
    }
}

/// A closed geodesic of the surface: the projection of the axis of a
/// hyperbolic class.
#[derive(Clone, Debug)]
pub struct ClosedGeodesic {
    pub class: ConjugacyClass,
    /// Period, the translation length of the class.
    pub length: f64,
    /// Unit phase point on the geodesic, inside the fundamental polygon.
    pub base: PhasePoint,
    /// Class element translating the lift through `base` forward by one
    /// period, built from the cutting sequence so it stays well conditioned.
    pub translation: Isometry,
}

/// Locate the closed geodesic of a hyperbolic class.
///
/// The axis computed from the class matrix loses accuracy for long words,
/// so it is refined by tracing one period through the polygon and taking
/// the axis of the resulting short deck product instead.
pub fn geodesic_from_class(group: &SurfaceGroup, class: &ConjugacyClass) -> Result<ClosedGeodesic> {
    if !class.is_hyperbolic() {
        return Err(Error::NonHyperbolic { trace: class.trace_abs });
    }
    let length = class.length();
    // the conjugate whose axis passes closest to the origin is the best
    // conditioned; conjugating by a prefix rotates the word
    let n = class.word.len();
    let mut best: Option<(f64, PhasePoint)> = None;
    for r in 0..n {
        let rotated: Word = class.word[r..].iter().chain(&class.word[..r]).copied().collect();
        let m = group.word_isometry(&rotated);
        let Some((repel, attract)) = m.fixed_points() else { continue };
        let th = closest_axis_point(repel, attract);
        if best.as_ref().is_none_or(|(d, _)| th.p.norm() < *d) {
            best = Some((th.p.norm(), th));
        }
    }
    let (_, start) = best.ok_or(Error::NonHyperbolic { trace: class.trace_abs })?;
    let mut base = group.reduce_to_domain(&start)?.0;
    let (_, deck) = trace_period(group, &base, length)?;
    let mut translation = deck.inverse();
    // one polishing pass with the short cutting-sequence element
    if let Some((r, a)) = translation.fixed_points() {
        let near = axis_point_near(base.p, r, a);
        if (translation_length(&translation) - length).abs() < 1e-8 && near.coord_distance(&base) < 1e-6 {
            base = group.reduce_to_domain(&near)?.0;
            translation = trace_period(group, &base, length)?.1.inverse();
        }
    }
    Ok(ClosedGeodesic { class: class.clone(), length, base, translation })
}

fn translation_length(m: &Isometry) -> f64 {
    2.0 * (0.5 * m.trace().abs()).max(1.0).acosh()
}

/// Follow `theta` for time `t` through the polygon. Returns the reduced end
/// state and the accumulated deck isometry.
fn trace_period(group: &SurfaceGroup, theta: &PhasePoint, t: f64) -> Result<(PhasePoint, Isometry)> {
    let mut state = *theta;
    let mut deck = Isometry::identity();
    let mut elapsed = 0.0;
    let cap = 64 + (8.0 * t) as usize;
    let mut steps = 0;
    while elapsed < t {
        steps += 1;
        if steps > cap {
            return Err(Error::ReductionFailed { cap });
        }
        let dt = exit_time(group, &state).min(t - elapsed);
        elapsed += dt;
        let (next, word) = group.reduce_to_domain(&exact_geodesic_flow(&state, dt))?;
        deck = group.deck_isometry(&word).compose(&deck).renormalized();
        state = next;
    }
    Ok((state, deck))
}

/// Point of the geodesic `repel → attract` nearest to `p`.
fn axis_point_near(p: C64, repel: C64, attract: C64) -> PhasePoint {
    let th = closest_axis_point(to_origin(p, repel), to_origin(p, attract));
    let d = 1.0 + p.conj() * th.p;
    let jac = (1.0 - p.norm_sqr()) / (d * d);
    exact_geodesic_flow(&PhasePoint::new(from_origin(p, th.p), jac * th.v), 0.0)
}

/// Unit phase point on the geodesic from `repel` to `attract` (boundary points)
/// nearest to the origin, heading towards `attract`.
fn closest_axis_point(repel: C64, attract: C64) -> PhasePoint {
    let chord = attract - repel;
    let tangent = chord / chord.norm();
    // unit normal pointing at the midpoint of the endpoints
    let mut dir = rotate_quarter(tangent);
    if (dir.conj() * (repel + attract)).re < 0.0 {
        dir = -dir;
    }
    // half the angular separation of the endpoints
    let delta = 0.5 * (repel / attract).arg().abs();
    let r = delta.cos() / (1.0 + delta.sin());
    let speed = 0.5 * (1.0 - r * r);
    let th = PhasePoint::new(dir * r, tangent * speed);
    // snap onto the exact geodesic through p with this velocity
    exact_geodesic_flow(&th, 0.0)
}

/// One passage of a closed geodesic through the fundamental polygon.
#[derive(Clone, Copy, Debug)]
pub struct Chord {
    /// Entry state (inside the closed polygon).
    pub entry: PhasePoint,
    pub duration: f64,
    /// Boundary endpoints of the supporting geodesic line, as angles in
    /// `[0, 2π)` sorted increasingly. Orientation-free.
    pub line: (f64, f64),
}

impl ClosedGeodesic {
    /// Decompose the closed geodesic into chords of the fundamental polygon,
    /// following it for one period from its first boundary crossing after
    /// `base`.
    pub fn chords(&self, group: &SurfaceGroup) -> Result<Vec<Chord>> {
        let mut out = Vec::new();
        // start on the boundary so that no chord is split at the ends
        let first = exit_time(group, &self.base);
        let mut state = group.reduce_to_domain(&exact_geodesic_flow(&self.base, first))?.0;
        let mut elapsed = 0.0;
        let cap = 64 + (8.0 * self.length) as usize;
        while elapsed < self.length - 1e-9 {
            if out.len() > cap {
                return Err(Error::ReductionFailed { cap });
            }
            let exit = exit_time(group, &state).min(self.length - elapsed);
            if exit > 1e-9 {
                out.push(Chord { entry: state, duration: exit, line: chord_line(group, &state, exit) });
            }
            elapsed += exit;
            let outside = exact_geodesic_flow(&state, exit);
            state = group.reduce_to_domain(&outside)?.0;
        }
        Ok(out)
    }
}

/// Supporting line of a chord. A chord running along a side is reported
/// as the line of the lower-indexed side of its glued pair, since the two
/// are the same curve on the surface.
fn chord_line(group: &SurfaceGroup, entry: &PhasePoint, duration: f64) -> (f64, f64) {
    let mid = exact_geodesic_flow(entry, 0.5 * duration).p;
    for (k, side) in group.sides().iter().enumerate() {
        if side.level(entry.p).abs() < 1e-9 && side.level(mid).abs() < 1e-9 {
            let partner = SurfaceGroup::inverse_letter(k as u8) as usize;
            let rep = &group.sides()[k.min(partner)];
            let half = rep.radius.atan();
            let c = rep.center.arg();
            let a = (c - half).rem_euclid(std::f64::consts::TAU);
            let b = (c + half).rem_euclid(std::f64::consts::TAU);
            return if a <= b { (a, b) } else { (b, a) };
        }
    }
    line_endpoints(entry)
}

fn line_endpoints(theta: &PhasePoint) -> (f64, f64) {
    let p = theta.p;
    let w = theta.v / theta.v.norm();
    let a = super::disk::from_origin(p, w).arg().rem_euclid(std::f64::consts::TAU);
    let b = super::disk::from_origin(p, -w).arg().rem_euclid(std::f64::consts::TAU);
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// First time (slightly past the boundary) at which the geodesic through
/// `theta` leaves the polygon.
fn exit_time(group: &SurfaceGroup, theta: &PhasePoint) -> f64 {
    let outside = |t: f64| group.domain_margin(exact_geodesic_flow(theta, t).p) < -super::surface::DOMAIN_TOLERANCE;
    let step = 0.05;
    let mut lo = 0.0;
    let mut hi = step;
    while !outside(hi) {
        lo = hi;
        hi += step;
        if hi > 20.0 {
            return hi;
        }
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if outside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
