#pragma once

#include <filesystem>
#include <string>

#include "spikeseg/event.hpp"

namespace spikeseg {

enum class EventFileFormat {
    binary,  // .evb: 16-byte header, window bounds, packed records
    csv,     // .csv: header line, then x,y,t_us,p,label rows
};

// Picks binary for ".evb", csv for ".csv"; throws otherwise.
EventFileFormat format_from_path(const std::filesystem::path& path);

// Round trip is exact: save_events followed by load_events reproduces the
// stream including window bounds and labels. Malformed input reports the
// offending record by line (csv) or byte offset (binary).
void save_events(const EventStream& stream, const std::filesystem::path& path,
                 EventFileFormat format);
EventStream load_events(const std::filesystem::path& path, EventFileFormat format);

void save_events(const EventStream& stream, const std::filesystem::path& path);
EventStream load_events(const std::filesystem::path& path);

// 16-bit binary PGM (P5, maxval 65535, big-endian samples).
void write_pgm16(const SpikeProjection& projection, const std::filesystem::path& path);

// 8-bit PGM for binary masks: nonzero -> 255.
void write_pgm8(const std::vector<std::uint8_t>& mask, int height, int width,
                const std::filesystem::path& path);
std::vector<std::uint8_t> read_pgm8(const std::filesystem::path& path, int& height, int& width);

}  // namespace spikeseg
