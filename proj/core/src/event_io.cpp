#include "spikeseg/event_io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spikeseg {

namespace {

constexpr std::uint32_t kMagic = 0x31535645;  // "EVS1" little-endian
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kRecordBytes = 14;  // u16 x, u16 y, i8 p, u8 label, u64 t_us

template <typename T>
void put_le(std::string& buf, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
    }
}

template <typename T>
T get_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    }
    return static_cast<T>(v);
}

[[noreturn]] void fail_at(const std::filesystem::path& path, std::size_t offset,
                          const std::string& what) {
    throw std::runtime_error(path.string() + ": " + what + " (byte offset " +
                             std::to_string(offset) + ")");
}

[[noreturn]] void fail_line(const std::filesystem::path& path, std::size_t line,
                            const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

EventLabel label_from_byte(std::uint8_t b, const std::filesystem::path& path,
                           std::size_t offset) {
    switch (b) {
        case 0: return EventLabel::background;
        case 1: return EventLabel::foreground;
        case 2: return EventLabel::none;
        default: fail_at(path, offset, "invalid label byte " + std::to_string(int(b)));
    }
}

void save_binary(const EventStream& s, const std::filesystem::path& path) {
    std::string buf;
    buf.reserve(16 + 24 + s.events.size() * kRecordBytes);
    put_le<std::uint32_t>(buf, kMagic);
    put_le<std::uint32_t>(buf, kVersion);
    put_le<std::uint32_t>(buf, s.width);
    put_le<std::uint32_t>(buf, s.height);
    put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(s.t_start_us));
    put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(s.t_end_us));
    put_le<std::uint64_t>(buf, s.events.size());
    for (const Event& e : s.events) {
        put_le<std::uint16_t>(buf, e.x);
        put_le<std::uint16_t>(buf, e.y);
        buf.push_back(static_cast<char>(e.polarity));
        buf.push_back(static_cast<char>(static_cast<std::uint8_t>(e.label)));
        put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(e.t_us));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

EventStream load_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
    if (raw.size() < 16) fail_at(path, raw.size(), "truncated header");
    if (get_le<std::uint32_t>(p) != kMagic) fail_at(path, 0, "bad magic");
    if (get_le<std::uint32_t>(p + 4) != kVersion) {
        fail_at(path, 4, "unsupported version " + std::to_string(get_le<std::uint32_t>(p + 4)));
    }
    EventStream s;
    s.width = static_cast<std::uint16_t>(get_le<std::uint32_t>(p + 8));
    s.height = static_cast<std::uint16_t>(get_le<std::uint32_t>(p + 12));
    if (raw.size() < 40) fail_at(path, raw.size(), "truncated window block");
    s.t_start_us = static_cast<std::int64_t>(get_le<std::uint64_t>(p + 16));
    s.t_end_us = static_cast<std::int64_t>(get_le<std::uint64_t>(p + 24));
    const std::uint64_t count = get_le<std::uint64_t>(p + 32);
    if (raw.size() != 40 + count * kRecordBytes) {
        fail_at(path, raw.size(), "size mismatch: expected " +
                                      std::to_string(40 + count * kRecordBytes) + " bytes");
    }
    s.events.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::size_t off = 40 + i * kRecordBytes;
        const unsigned char* r = p + off;
        Event e;
        e.x = get_le<std::uint16_t>(r);
        e.y = get_le<std::uint16_t>(r + 2);
        e.polarity = static_cast<std::int8_t>(r[4]);
        if (e.polarity != 1 && e.polarity != -1) {
            fail_at(path, off + 4, "invalid polarity " + std::to_string(int(e.polarity)));
        }
        e.label = label_from_byte(r[5], path, off + 5);
        e.t_us = static_cast<std::int64_t>(get_le<std::uint64_t>(r + 6));
        s.events.push_back(e);
    }
    return s;
}

void save_csv(const EventStream& s, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "width=" << s.width << ",height=" << s.height << ",t_start_us=" << s.t_start_us
        << ",t_end_us=" << s.t_end_us << "\n";
    out << "x,y,t_us,p,label\n";
    for (const Event& e : s.events) {
        out << e.x << ',' << e.y << ',' << e.t_us << ',' << int(e.polarity) << ','
            << int(static_cast<std::uint8_t>(e.label)) << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

EventStream load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) fail_line(path, 1, "missing header");
    EventStream s;
    {
        long long w = -1, h = -1, t0 = 0, t1 = 0;
        if (std::sscanf(line.c_str(), "width=%lld,height=%lld,t_start_us=%lld,t_end_us=%lld",
                        &w, &h, &t0, &t1) != 4 ||
            w < 0 || h < 0) {
            fail_line(path, 1, "malformed header: " + line);
        }
        s.width = static_cast<std::uint16_t>(w);
        s.height = static_cast<std::uint16_t>(h);
        s.t_start_us = t0;
        s.t_end_us = t1;
    }
    if (!std::getline(in, line) || line != "x,y,t_us,p,label") {
        fail_line(path, 2, "missing column header");
    }
    std::size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        long long x, y, t, pol, lab;
        if (std::sscanf(line.c_str(), "%lld,%lld,%lld,%lld,%lld", &x, &y, &t, &pol, &lab) != 5) {
            fail_line(path, lineno, "malformed record: " + line);
        }
        if (pol != 1 && pol != -1) {
            fail_line(path, lineno, "invalid polarity " + std::to_string(pol));
        }
        if (lab < 0 || lab > 2) fail_line(path, lineno, "invalid label " + std::to_string(lab));
        Event e;
        e.x = static_cast<std::uint16_t>(x);
        e.y = static_cast<std::uint16_t>(y);
        e.t_us = t;
        e.polarity = static_cast<std::int8_t>(pol);
        e.label = static_cast<EventLabel>(lab);
        s.events.push_back(e);
    }
    return s;
}

}  // namespace

EventFileFormat format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".evb") return EventFileFormat::binary;
    if (ext == ".csv") return EventFileFormat::csv;
    throw std::invalid_argument("unknown event file extension: " + path.string());
}

void save_events(const EventStream& stream, const std::filesystem::path& path,
                 EventFileFormat format) {
    if (format == EventFileFormat::binary) {
        save_binary(stream, path);
    } else {
        save_csv(stream, path);
    }
}

EventStream load_events(const std::filesystem::path& path, EventFileFormat format) {
    return format == EventFileFormat::binary ? load_binary(path) : load_csv(path);
}

void save_events(const EventStream& stream, const std::filesystem::path& path) {
    save_events(stream, path, format_from_path(path));
}

EventStream load_events(const std::filesystem::path& path) {
    return load_events(path, format_from_path(path));
}

void write_pgm16(const SpikeProjection& projection, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "P5\n" << projection.width << " " << projection.height << "\n65535\n";
    for (std::uint32_t v : projection.counts) {
        const std::uint16_t clipped = static_cast<std::uint16_t>(v > 65535 ? 65535 : v);
        out.put(static_cast<char>(clipped >> 8));
        out.put(static_cast<char>(clipped & 0xff));
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_pgm8(const std::vector<std::uint8_t>& mask, int height, int width,
                const std::filesystem::path& path) {
    if (mask.size() != static_cast<std::size_t>(height) * width) {
        throw std::invalid_argument("write_pgm8: mask size does not match dims");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "P5\n" << width << " " << height << "\n255\n";
    for (std::uint8_t v : mask) out.put(static_cast<char>(v ? 255 : 0));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::uint8_t> read_pgm8(const std::filesystem::path& path, int& height, int& width) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::string magic;
    int maxval = 0;
    in >> magic >> width >> height >> maxval;
    if (magic != "P5" || maxval != 255 || width <= 0 || height <= 0) {
        throw std::runtime_error("not an 8-bit P5 PGM: " + path.string());
    }
    in.get();  // single whitespace after maxval
    std::vector<std::uint8_t> data(static_cast<std::size_t>(height) * width);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!in) throw std::runtime_error("truncated PGM: " + path.string());
    return data;
}

}  // namespace spikeseg
