use super::person::{Gaze, Person};

pub const HEAD_LOOKING: f64 = 1.0;
pub const HEAD_AWAY: f64 = 0.25;
pub const BODY: f64 = 0.5;
pub const PROP: f64 = 0.8;

/// Single-channel image with real intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn blank(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn lit_pixels(&self) -> usize {
        self.data.iter().filter(|&&v| v > 0.0).count()
    }

    fn fill(&mut self, rect: PixelRect, value: f64) {
        for r in rect.top..rect.bottom {
            for c in rect.left..rect.right {
                self.data[r * self.width + c] = value;
            }
        }
    }
}

/// 8-bit quantized frame as stored in replay and on disk.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Option<Self> {
        (height > 0 && width > 0 && pixels.len() == height * width).then_some(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn quantize(image: &Image) -> Self {
        Self {
            height: image.height,
            width: image.width,
            pixels: image
                .data
                .iter()
                .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect(),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Appends intensities in `[0, 1]` to `out`.
    pub fn extend_intensities(&self, out: &mut Vec<f64>) {
        out.extend(self.pixels.iter().map(|&p| f64::from(p) / 255.0));
    }
}

#[derive(Debug, Clone, Copy)]
struct PixelRect {
    top: usize,
    bottom: usize,
    left: usize,
    right: usize,
}

/// Rounds a real-valued box to pixels (at least one pixel each way) and
/// clips it to the image. Returns `None` when it falls entirely outside.
fn pixel_rect(img: &Image, left: f64, top: f64, width: f64, height: f64) -> Option<PixelRect> {
    let l = left.round() as i64;
    let t = top.round() as i64;
    let r = l + (width.round() as i64).max(1);
    let b = t + (height.round() as i64).max(1);
    let clip = |v: i64, hi: usize| v.clamp(0, hi as i64) as usize;
    let rect = PixelRect {
        top: clip(t, img.height),
        bottom: clip(b, img.height),
        left: clip(l, img.width),
        right: clip(r, img.width),
    };
    (rect.top < rect.bottom && rect.left < rect.right).then_some(rect)
}

/// Draws everyone present, farthest first so nearer people occlude.
///
/// Person extent scales as `1/d`. The grayscale frame codes the head by gaze
/// (looking heads are brighter and wider), the body as mid-gray, and a busy
/// person's prop as a bright block held in front of the chest. The depth frame fills the
/// same silhouette with `1 - d/6`.
pub fn render_scene(persons: &[Person], height: usize, width: usize) -> (Image, Image) {
    let mut gray = Image::blank(height, width);
    let mut depth = Image::blank(height, width);
    let scale = height as f64 / 32.0;
    let mut order: Vec<&Person> = persons.iter().collect();
    order.sort_by(|a, b| b.distance.total_cmp(&a.distance));
    for p in order {
        let d = p.distance;
        let body_h = 24.0 * scale / d;
        let body_w = 8.0 * scale / d;
        let cx = width as f64 / 2.0 + p.lateral * 12.0 * scale / d;
        let top = height as f64 / 2.0 - body_h / 2.0;
        let head_h = body_h / 4.0;
        let head_w = match p.gaze {
            Gaze::AtRobot => body_w,
            Gaze::Away => body_w * 0.6,
        };
        let depth_value = 1.0 - d / Person::MAX_DISTANCE;
        let head = pixel_rect(&gray, cx - head_w / 2.0, top, head_w, head_h);
        let body = pixel_rect(&gray, cx - body_w / 2.0, top + head_h, body_w, body_h - head_h);
        let prop = p.busy.then(|| {
            pixel_rect(
                &gray,
                cx - body_w / 4.0,
                top + body_h * 0.4,
                body_w / 2.0,
                body_h / 4.0,
            )
        });
        let head_value = match p.gaze {
            Gaze::AtRobot => HEAD_LOOKING,
            Gaze::Away => HEAD_AWAY,
        };
        for (rect, value) in [(body, BODY), (head, head_value)] {
            if let Some(rect) = rect {
                gray.fill(rect, value);
                depth.fill(rect, depth_value);
            }
        }
        if let Some(Some(rect)) = prop {
            gray.fill(rect, PROP);
            depth.fill(rect, depth_value);
        }
    }
    (gray, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::socialsim::person::Motion;

    fn person(distance: f64, gaze: Gaze, busy: bool) -> Person {
        Person {
            distance,
            lateral: 0.0,
            gaze,
            motion: Motion::Standing,
            busy,
            stop_distance: distance,
        }
    }

    #[test]
    fn empty_scene_is_black() {
        let (g, d) = render_scene(&[], 32, 32);
        assert!(g.data.iter().chain(&d.data).all(|&v| v == 0.0));
    }

    #[test]
    fn depth_codes_distance() {
        let p = person(3.0, Gaze::AtRobot, false);
        let (g, d) = render_scene(&[p], 32, 32);
        let lit: Vec<f64> = d.data.iter().copied().filter(|&v| v > 0.0).collect();
        assert!(!lit.is_empty());
        assert!(lit.iter().all(|&v| v == 0.5));
        assert_eq!(g.lit_pixels(), d.lit_pixels());
    }

    #[test]
    fn nearer_is_larger() {
        let near = person(1.0, Gaze::Away, false);
        let far = person(3.0, Gaze::Away, false);
        let (gn, _) = render_scene(&[near], 32, 32);
        let (gf, _) = render_scene(&[far], 32, 32);
        assert!(gn.lit_pixels() > gf.lit_pixels());
    }

    #[test]
    fn gaze_and_prop_are_visible() {
        let looking = person(1.5, Gaze::AtRobot, false);
        let away = person(1.5, Gaze::Away, false);
        let busy = person(1.5, Gaze::Away, true);
        let (g1, d1) = render_scene(std::slice::from_ref(&looking), 32, 32);
        let (g2, d2) = render_scene(std::slice::from_ref(&away), 32, 32);
        let (g3, _) = render_scene(std::slice::from_ref(&busy), 32, 32);
        assert!(g1.data.contains(&HEAD_LOOKING));
        assert!(g2.data.contains(&HEAD_AWAY) && !g2.data.contains(&HEAD_LOOKING));
        assert!(g3.data.contains(&PROP));
        // Head shape differs in depth as well.
        assert_ne!(d1.lit_pixels(), d2.lit_pixels());
    }

    #[test]
    fn quantization() {
        let img = Image {
            height: 1,
            width: 4,
            data: vec![0.0, 0.5, 0.6, 1.0],
        };
        assert_eq!(Frame::quantize(&img).pixels(), &[0, 128, 153, 255]);
    }
}
