//! Power spectral densities, power-line harmonics and wavelet scalograms.

mod cwt;
mod harmonics;
mod io;
mod welch;

pub use cwt::{cwt_scalogram, log_frequencies, Scalogram, WaveletDescriptor, MORLET_OMEGA0};
pub use harmonics::{find_harmonics, Harmonic, DETECTION_SNR, NOISE_BAND_HZ, PEAK_SEARCH_HZ};
pub use io::{read_scalogram, write_scalogram, write_spectrum_csv};
pub use welch::{default_segment_len, psd_welch, Spectrum, Taper, WelchAccumulator, WelchMeta};
