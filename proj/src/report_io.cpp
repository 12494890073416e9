#include "pdhj/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace pdhj {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_line(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    line += '\n';
    return line;
}

void write_text_file(const std::filesystem::path& file, const std::string& content) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + file.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + file.string());
}

void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::string content = csv_line(header);
    for (const auto& row : rows) content += csv_line(row);
    write_text_file(file, content);
}

void write_json(const std::filesystem::path& file, const nlohmann::ordered_json& j) {
    write_text_file(file, j.dump(2) + "\n");
}

}  // namespace pdhj
