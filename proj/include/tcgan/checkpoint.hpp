#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tcgan/common.hpp"
#include "tcgan/tensor.hpp"

// Textual checkpoint: header, "# meta <key> <value>" lines, then per tensor a
// "name shape_csv" line followed by one row-major value per line. Values are
// written with 17 significant digits so doubles round-trip exactly.

namespace tcgan {

inline constexpr const char* kCheckpointHeader = "# tcgan-ckpt v1";

struct Checkpoint {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const std::string* find_meta(const std::string& key) const {
        for (const auto& [k, v] : meta)
            if (k == key) return &v;
        return nullptr;
    }
    const std::string& require_meta(const std::string& key) const {
        const std::string* v = find_meta(key);
        if (!v) throw ParseError("checkpoint is missing meta key '" + key + "'");
        return *v;
    }
    const Tensor* find_tensor(const std::string& name) const {
        for (const auto& [k, v] : tensors)
            if (k == name) return &v;
        return nullptr;
    }
    const Tensor& require_tensor(const std::string& name, const Shape& shape) const {
        const Tensor* t = find_tensor(name);
        if (!t) throw ParseError("checkpoint is missing tensor '" + name + "'");
        if (t->shape() != shape)
            throw ParseError("checkpoint tensor '" + name + "' has shape " +
                             shape_str(t->shape()) + ", expected " + shape_str(shape));
        return *t;
    }
};

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint file: " + path);
    out << kCheckpointHeader << "\n";
    for (const auto& [k, v] : ckpt.meta) out << "# meta " << k << " " << v << "\n";
    char buf[32];
    for (const auto& [name, t] : ckpt.tensors) {
        out << name << " ";
        const Shape& s = t.shape();
        for (size_t i = 0; i < s.size(); ++i) out << (i ? "," : "") << s[i];
        out << "\n";
        for (double v : t.data()) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf << "\n";
        }
    }
    if (!out) throw DataError("failed writing checkpoint file: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint file: " + path);
    Checkpoint ckpt;
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line) || line != kCheckpointHeader)
        throw ParseError("line 1: expected checkpoint header '" +
                         std::string(kCheckpointHeader) + "'");
    line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.rfind("# meta ", 0) == 0) {
            const std::string rest = line.substr(7);
            const size_t sp = rest.find(' ');
            if (sp == std::string::npos)
                throw ParseError("line " + std::to_string(line_no) + ": bad meta line");
            ckpt.meta.emplace_back(rest.substr(0, sp), rest.substr(sp + 1));
            continue;
        }
        const size_t sp = line.find(' ');
        if (sp == std::string::npos)
            throw ParseError("line " + std::to_string(line_no) +
                             ": expected 'name shape_csv'");
        const std::string name = line.substr(0, sp);
        Shape shape;
        {
            std::stringstream ss(line.substr(sp + 1));
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                try {
                    shape.push_back(std::stoi(tok));
                } catch (const std::exception&) {
                    throw ParseError("line " + std::to_string(line_no) + ": bad extent '" + tok +
                                     "'");
                }
            }
        }
        const int numel = shape_numel(shape);
        std::vector<double> values;
        values.reserve(static_cast<size_t>(numel));
        for (int i = 0; i < numel; ++i) {
            if (!std::getline(in, line))
                throw ParseError("tensor '" + name + "': file ends after " + std::to_string(i) +
                                 " of " + std::to_string(numel) + " values");
            ++line_no;
            try {
                values.push_back(std::stod(line));
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(line_no) + ": bad value '" + line + "'");
            }
        }
        ckpt.tensors.emplace_back(name, Tensor::from(std::move(shape), std::move(values)));
    }
    return ckpt;
}

}  // namespace tcgan
