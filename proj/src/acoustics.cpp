#include "vibreau/acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "vibreau/errors.hpp"

namespace vibreau::acoustics {

namespace {

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
           static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, std::string_view tag) {
    return std::equal(tag.begin(), tag.end(), b.begin() + static_cast<std::ptrdiff_t>(at),
                      [](char c, std::uint8_t u) { return static_cast<std::uint8_t>(c) == u; });
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_tag(std::vector<std::uint8_t>& out, std::string_view tag) {
    for (char c : tag) out.push_back(static_cast<std::uint8_t>(c));
}

int sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

AudioClip load_pcm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12) throw FormatError("file shorter than a RIFF header", bytes.size());
    if (!tag_is(bytes, 0, "RIFF")) throw FormatError("missing RIFF tag", 0);
    if (!tag_is(bytes, 8, "WAVE")) throw FormatError("missing WAVE tag", 8);

    bool have_format = false;
    int channels = 0;
    int sample_rate = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::size_t size = read_u32(bytes, pos + 4);
        const std::size_t body = pos + 8;
        if (tag_is(bytes, pos, "fmt ")) {
            if (size < 16 || body + 16 > bytes.size()) throw FormatError("truncated fmt chunk", pos);
            const auto format = read_u16(bytes, body);
            channels = read_u16(bytes, body + 2);
            sample_rate = static_cast<int>(read_u32(bytes, body + 4));
            const auto bits = read_u16(bytes, body + 14);
            if (format != 1) throw FormatError("unsupported encoding " + std::to_string(format), body);
            if (bits != 16) {
                throw FormatError("unsupported bit depth " + std::to_string(bits), body + 14);
            }
            if (channels < 1 || channels > 2) {
                throw FormatError("unsupported channel count " + std::to_string(channels), body + 2);
            }
            if (sample_rate <= 0) throw FormatError("invalid sample rate", body + 4);
            have_format = true;
        } else if (tag_is(bytes, pos, "data")) {
            if (!have_format) throw FormatError("data chunk before fmt chunk", pos);
            if (size > bytes.size() - body) throw FormatError("truncated data chunk", bytes.size());
            const std::size_t frame = 2 * static_cast<std::size_t>(channels);
            if (size % frame != 0) throw FormatError("data size is not a whole number of frames", pos + 4);
            AudioClip clip;
            clip.sample_rate = sample_rate;
            clip.channels.assign(static_cast<std::size_t>(channels), {});
            const std::size_t frames = size / frame;
            for (auto& ch : clip.channels) ch.reserve(frames);
            for (std::size_t f = 0; f < frames; ++f) {
                for (int c = 0; c < channels; ++c) {
                    const auto raw = static_cast<std::int16_t>(read_u16(bytes, body + f * frame + 2 * c));
                    clip.channels[static_cast<std::size_t>(c)].push_back(raw / 32768.0);
                }
            }
            return clip;
        }
        pos = body + size + (size & 1);
    }
    throw FormatError(have_format ? "missing data chunk" : "missing fmt chunk", pos);
}

AudioClip load_wav_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
    return load_pcm(bytes);
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
    const auto channels = static_cast<std::uint16_t>(clip.channel_count());
    if (channels < 1 || channels > 2) throw InputError("clip must have one or two channels");
    const std::size_t frames = clip.length();
    const auto data_size = static_cast<std::uint32_t>(frames * channels * 2);
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_size);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_size);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, 1);
    put_u16(out, channels);
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * channels * 2);
    put_u16(out, static_cast<std::uint16_t>(channels * 2));
    put_u16(out, 16);
    put_tag(out, "data");
    put_u32(out, data_size);
    for (std::size_t f = 0; f < frames; ++f) {
        for (const auto& ch : clip.channels) {
            const double scaled = std::clamp(std::round(ch[f] * 32768.0), -32768.0, 32767.0);
            put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
        }
    }
    return out;
}

void write_wav_file(const std::filesystem::path& path, const AudioClip& clip) {
    const auto bytes = encode_wav(clip);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ImpactMeasurement impact_duration(const AudioClip& clip, int channel, double noise_floor) {
    if (channel < 0 || channel >= clip.channel_count()) {
        throw InputError("channel " + std::to_string(channel) + " out of range");
    }
    if (!(noise_floor >= 0.0)) throw InputError("noise floor must be >= 0");
    const auto& raw = clip.channels[static_cast<std::size_t>(channel)];
    const std::size_t n = raw.size();
    std::vector<int> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = std::abs(raw[i]) <= noise_floor ? 0 : sign(raw[i]);

    // Crossing events as (index where the opened region starts, index where the closed region ends).
    struct Event {
        std::size_t opens;
        std::size_t closes;
    };
    std::vector<Event> events;
    for (std::size_t i = 0; i < n; ++i) {
        if (s[i] == 0) {
            const bool touches = (i > 0 && s[i - 1] != 0) || (i + 1 < n && s[i + 1] != 0);
            if (touches) events.push_back({i, i});
        } else if (i > 0 && s[i - 1] != 0 && s[i - 1] != s[i]) {
            events.push_back({i, i - 1});
        }
    }

    ImpactMeasurement m;
    if (events.size() < 2) {
        if (!events.empty()) m.first_crossing = m.last_crossing = events.front().opens;
        return m;
    }
    m.first_crossing = events.front().opens;
    m.last_crossing = events.back().closes;
    m.duration_ms = 1000.0 * static_cast<double>(m.last_crossing - m.first_crossing) / clip.sample_rate;
    return m;
}

double mean_duration(std::span<const ImpactMeasurement> measurements) {
    if (measurements.empty()) throw InputError("mean of an empty measurement list");
    double sum = 0.0;
    for (const auto& m : measurements) sum += m.duration_ms;
    return sum / static_cast<double>(measurements.size());
}

std::string_view to_string(Symmetry s) {
    return s == Symmetry::asymmetric ? "asymmetric" : "symmetric";
}

AsymmetryResult channel_asymmetry(const AudioClip& clip, SampleRange window, double threshold) {
    if (clip.channel_count() != 2) throw InputError("channel asymmetry needs a stereo clip");
    if (!(threshold >= 1.0)) throw InputError("asymmetry threshold must be >= 1");
    const std::size_t end = std::min(window.end, clip.length());
    const std::size_t begin = std::min(window.begin, end);
    double left = 0.0, right = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        left = std::max(left, std::abs(clip.channels[0][i]));
        right = std::max(right, std::abs(clip.channels[1][i]));
    }
    if (left == 0.0 && right == 0.0) throw InputError("both channels are silent; ratio undefined");
    AsymmetryResult out;
    out.ratio = right == 0.0 ? std::numeric_limits<double>::infinity() : left / right;
    const bool asymmetric = out.ratio > threshold || out.ratio < 1.0 / threshold;
    out.classification = asymmetric ? Symmetry::asymmetric : Symmetry::symmetric;
    return out;
}

}  // namespace vibreau::acoustics
