#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace vibreau::acoustics {

/// Normalized audio: one vector of samples in [-1, 1] per channel.
struct AudioClip {
    int sample_rate = 48000;
    std::vector<std::vector<double>> channels;

    int channel_count() const noexcept { return static_cast<int>(channels.size()); }
    std::size_t length() const noexcept { return channels.empty() ? 0 : channels.front().size(); }
};

/// Parses a RIFF/WAVE container holding 16-bit signed PCM with one or two channels.
/// Unknown chunks are skipped. Throws FormatError (with byte offset) otherwise.
AudioClip load_pcm(std::span<const std::uint8_t> bytes);
AudioClip load_wav_file(const std::filesystem::path& path);

/// Canonical 44-byte-header 16-bit PCM encoding; samples are clamped and rounded.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);
void write_wav_file(const std::filesystem::path& path, const AudioClip& clip);

inline constexpr double kDefaultNoiseFloor = 0.01;

struct ImpactMeasurement {
    double duration_ms = 0.0;
    std::size_t first_crossing = 0;
    std::size_t last_crossing = 0;
};

/// Duration between the first and last zero crossings of one channel.
///
/// Samples with |x| <= noise_floor are treated as zero. A crossing is either a zero
/// sample next to a nonzero one, or a sign change between two consecutive nonzero
/// samples. The first crossing is reported at the first sample of the region it
/// opens and the last at the final sample of the region it closes, which keeps the
/// measurement invariant under time reversal. Fewer than two crossings give 0 ms.
ImpactMeasurement impact_duration(const AudioClip& clip, int channel,
                                  double noise_floor = kDefaultNoiseFloor);

/// Arithmetic mean of the measured durations (ms). Throws InputError when empty.
double mean_duration(std::span<const ImpactMeasurement> measurements);

enum class Symmetry { asymmetric, symmetric };

std::string_view to_string(Symmetry s);

/// Half-open sample range [begin, end); clamped to the clip.
struct SampleRange {
    std::size_t begin = 0;
    std::size_t end = static_cast<std::size_t>(-1);
};

struct AsymmetryResult {
    double ratio = 1.0;  // peak |left| / peak |right|, +inf when only the left is nonzero
    Symmetry classification = Symmetry::symmetric;
};

inline constexpr double kDefaultAsymmetryThreshold = 1.5;

/// Compares peak amplitudes of the two channels of a stereo clip. Asymmetric when the
/// ratio exceeds `threshold` or falls below its reciprocal. Throws InputError for
/// mono clips or when both peaks are zero.
AsymmetryResult channel_asymmetry(const AudioClip& clip, SampleRange window = {},
                                  double threshold = kDefaultAsymmetryThreshold);

}  // namespace vibreau::acoustics
