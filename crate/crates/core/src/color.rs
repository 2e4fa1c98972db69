//! RGB / YCbCr conversion and three-channel denoising.

use crate::denoise::{denoise_channel_with, ChannelParams, DenoiseOptions, StageTimings};
use crate::image::{Channel, Planar, MAX_INTENSITY};
use crate::{Error, Result, Seed};

const TO_YCBCR: [[f64; 3]; 3] = [
    [0.299, 0.587, 0.114],
    [-0.169, -0.331, 0.500],
    [0.500, -0.419, -0.081],
];
const YCBCR_OFFSET: [f64; 3] = [0.0, 128.0, 128.0];

// Applied to (Y, Cb - 128, Cr - 128).
const TO_RGB: [[f64; 3]; 3] = [
    [1.000, 0.000, 1.400],
    [1.000, -0.343, -0.711],
    [1.000, 1.765, 0.000],
];

/// Unclamped forward transform of one pixel.
pub fn rgb_to_ycbcr_pixel(rgb: [f64; 3]) -> [f64; 3] {
    let mut out = YCBCR_OFFSET;
    for (o, row) in out.iter_mut().zip(TO_YCBCR.iter()) {
        *o += row[0] * rgb[0] + row[1] * rgb[1] + row[2] * rgb[2];
    }
    out
}

/// Unclamped inverse transform of one pixel.
pub fn ycbcr_to_rgb_pixel(ycc: [f64; 3]) -> [f64; 3] {
    let centred = [ycc[0], ycc[1] - 128.0, ycc[2] - 128.0];
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(TO_RGB.iter()) {
        *o = row[0] * centred[0] + row[1] * centred[1] + row[2] * centred[2];
    }
    out
}

fn clamp3(v: [f64; 3]) -> [f64; 3] {
    v.map(|x| x.clamp(0.0, MAX_INTENSITY))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    channels: [Channel; 3],
}

impl RgbImage {
    pub fn new(r: Channel, g: Channel, b: Channel) -> Result<Self> {
        if r.side() != g.side() || r.side() != b.side() {
            return Err(Error::InvalidInput(format!(
                "channel sides differ: {}, {}, {}",
                r.side(),
                g.side(),
                b.side()
            )));
        }
        Ok(Self {
            channels: [r, g, b],
        })
    }

    /// Constant-colour image.
    pub fn filled(side: usize, rgb: [f64; 3]) -> Self {
        Self {
            channels: rgb.map(|v| Channel::filled(side, v)),
        }
    }

    pub fn side(&self) -> usize {
        self.channels[0].side()
    }

    pub fn channels(&self) -> &[Channel; 3] {
        &self.channels
    }

    pub fn into_channels(self) -> [Channel; 3] {
        self.channels
    }

    pub fn pixel(&self, k: usize) -> [f64; 3] {
        [
            self.channels[0].data()[k],
            self.channels[1].data()[k],
            self.channels[2].data()[k],
        ]
    }

    fn from_pixels(side: usize, pixels: impl Iterator<Item = [f64; 3]>) -> Result<Self> {
        let mut planes = [
            Vec::with_capacity(side * side),
            Vec::with_capacity(side * side),
            Vec::with_capacity(side * side),
        ];
        for p in pixels {
            for (plane, v) in planes.iter_mut().zip(p) {
                plane.push(v);
            }
        }
        let [r, g, b] = planes;
        Self::new(
            Channel::from_clamped(side, r)?,
            Channel::from_clamped(side, g)?,
            Channel::from_clamped(side, b)?,
        )
    }
}

impl Planar for RgbImage {
    fn side(&self) -> usize {
        RgbImage::side(self)
    }

    fn planes(&self) -> Vec<&[f64]> {
        self.channels.iter().map(Channel::data).collect()
    }

    fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let mut plane = 0;
        let channels = self.channels.clone().map(|c| {
            let p = plane;
            plane += 1;
            c.map_values(|_, i, v| f(p, i, v))
        });
        Self { channels }
    }
}

/// Luminance and two chroma planes, each clamped into `[0, 255]`.
#[derive(Clone, Debug, PartialEq)]
pub struct YcbcrImage {
    pub y: Channel,
    pub cb: Channel,
    pub cr: Channel,
}

impl YcbcrImage {
    pub fn new(y: Channel, cb: Channel, cr: Channel) -> Result<Self> {
        if y.side() != cb.side() || y.side() != cr.side() {
            return Err(Error::InvalidInput("YCbCr channel sides differ".into()));
        }
        Ok(Self { y, cb, cr })
    }

    pub fn side(&self) -> usize {
        self.y.side()
    }

    pub fn pixel(&self, k: usize) -> [f64; 3] {
        [self.y.data()[k], self.cb.data()[k], self.cr.data()[k]]
    }
}

pub fn rgb_to_ycbcr(img: &RgbImage) -> YcbcrImage {
    let side = img.side();
    let converted = RgbImage::from_pixels(
        side,
        (0..side * side).map(|k| clamp3(rgb_to_ycbcr_pixel(img.pixel(k)))),
    )
    .expect("clamped conversion stays in range");
    let [y, cb, cr] = converted.into_channels();
    YcbcrImage { y, cb, cr }
}

pub fn ycbcr_to_rgb(img: &YcbcrImage) -> RgbImage {
    let side = img.side();
    RgbImage::from_pixels(
        side,
        (0..side * side).map(|k| clamp3(ycbcr_to_rgb_pixel(img.pixel(k)))),
    )
    .expect("clamped conversion stays in range")
}

/// Denoising parameters for the Y, Cb and Cr channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamTriplet {
    pub y: ChannelParams,
    pub cb: ChannelParams,
    pub cr: ChannelParams,
}

impl ParamTriplet {
    pub const fn new(y: ChannelParams, cb: ChannelParams, cr: ChannelParams) -> Self {
        Self { y, cb, cr }
    }

    /// Published schedule for relative noise levels of 2, 4 and 6 percent:
    /// the luminance patch grows with the noise and the chroma patches stay
    /// one step larger. `None` for other levels.
    pub fn for_noise_level(zeta_percent: u32) -> Option<Self> {
        let (luma, chroma) = match zeta_percent {
            2 => (5, 7),
            4 => (7, 9),
            6 => (9, 11),
            _ => return None,
        };
        Some(Self::new(
            ChannelParams::new(luma, 20, 80),
            ChannelParams::new(chroma, 20, 80),
            ChannelParams::new(chroma, 20, 80),
        ))
    }

    pub fn validate(&self, side: usize) -> Result<()> {
        self.y.validate(side)?;
        self.cb.validate(side)?;
        self.cr.validate(side)
    }
}

/// Per-channel seeds derived from a master seed.
pub fn channel_seeds(seed: Seed) -> [Seed; 3] {
    [seed.offset(1), seed.offset(2), seed.offset(3)]
}

#[derive(Clone, Debug)]
pub struct RgbDenoiseReport {
    pub image: RgbImage,
    /// Denoised channels before conversion back to RGB.
    pub ycbcr: YcbcrImage,
    pub timings: StageTimings,
}

pub fn denoise_rgb(img: &RgbImage, params: &ParamTriplet, seed: Seed) -> Result<RgbImage> {
    denoise_rgb_with(img, params, seed, &DenoiseOptions::default()).map(|r| r.image)
}

/// Converts to YCbCr, denoises each channel with its own parameters and
/// converts back. Channels run one after another so only one set of
/// `n^2 x n^2` matrices is alive at a time.
pub fn denoise_rgb_with(
    img: &RgbImage,
    params: &ParamTriplet,
    seed: Seed,
    options: &DenoiseOptions,
) -> Result<RgbDenoiseReport> {
    params.validate(img.side())?;
    let ycc = rgb_to_ycbcr(img);
    let [sy, scb, scr] = channel_seeds(seed);
    let mut timings = StageTimings::default();

    let y = denoise_channel_with(&ycc.y, &params.y, sy, options)?;
    timings.accumulate(&y.timings);
    let cb = denoise_channel_with(&ycc.cb, &params.cb, scb, options)?;
    timings.accumulate(&cb.timings);
    let cr = denoise_channel_with(&ycc.cr, &params.cr, scr, options)?;
    timings.accumulate(&cr.timings);

    let ycbcr = YcbcrImage::new(y.channel, cb.channel, cr.channel)?;
    Ok(RgbDenoiseReport {
        image: ycbcr_to_rgb(&ycbcr),
        ycbcr,
        timings,
    })
}
