#include "tsreject/serialize.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace tsreject::serialize {

namespace {

constexpr const char* kMagic = "tsreject-file v1";

[[noreturn]] void missing(const std::string& name) {
    throw DataError("model file: missing field '" + name + "'");
}

// Stream extraction of doubles rejects "inf"/"nan", which the sentinel
// thresholds rely on; strtod accepts them.
double parse_number(const std::string& token) {
    char* end = nullptr;
    const double value = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || token.empty()) {
        throw DataError("model file: bad numeric token '" + token + "'");
    }
    return value;
}

}  // namespace

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void Document::put_int(const std::string& name, long long value) { ints_[name] = value; }
void Document::put_num(const std::string& name, double value) { nums_[name] = value; }
void Document::put_str(const std::string& name, const std::string& value) { strs_[name] = value; }
void Document::put_mat(const std::string& name, const Matrix& value) { mats_[name] = value; }

void Document::put_vec(const std::string& name, const Vector& value) {
    mats_[name] = value;
}

long long Document::get_int(const std::string& name) const {
    const auto it = ints_.find(name);
    if (it == ints_.end()) missing(name);
    return it->second;
}

double Document::get_num(const std::string& name) const {
    const auto it = nums_.find(name);
    if (it == nums_.end()) missing(name);
    return it->second;
}

const std::string& Document::get_str(const std::string& name) const {
    const auto it = strs_.find(name);
    if (it == strs_.end()) missing(name);
    return it->second;
}

const Matrix& Document::get_mat(const std::string& name) const {
    const auto it = mats_.find(name);
    if (it == mats_.end()) missing(name);
    return it->second;
}

Vector Document::get_vec(const std::string& name) const {
    const Matrix& m = get_mat(name);
    if (m.cols() != 1) {
        throw DataError("model file: field '" + name + "' is not a vector");
    }
    return m.col(0);
}

bool Document::has(const std::string& name) const {
    return ints_.count(name) || nums_.count(name) || strs_.count(name) || mats_.count(name);
}

void Document::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << kMagic << "\n";
    for (const auto& [name, value] : ints_) {
        out << "int " << name << " " << value << "\n";
    }
    for (const auto& [name, value] : nums_) {
        out << "num " << name << " " << format_double(value) << "\n";
    }
    for (const auto& [name, value] : strs_) {
        out << "str " << name << " " << value << "\n";
    }
    for (const auto& [name, value] : mats_) {
        out << "mat " << name << " " << value.rows() << " " << value.cols() << "\n";
        for (Index r = 0; r < value.rows(); ++r) {
            for (Index c = 0; c < value.cols(); ++c) {
                if (c > 0) out << " ";
                out << format_double(value(r, c));
            }
            out << "\n";
        }
    }
    out << "end\n";
    if (!out) throw DataError("write failed: " + path);
}

Document Document::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != kMagic) {
        throw DataError("not a tsreject model file: " + path);
    }
    Document doc;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line == "end") return doc;
        std::istringstream ss(line);
        std::string tag, name;
        ss >> tag >> name;
        if (tag == "int") {
            long long v;
            ss >> v;
            doc.ints_[name] = v;
        } else if (tag == "num") {
            std::string token;
            ss >> token;
            doc.nums_[name] = parse_number(token);
        } else if (tag == "str") {
            std::string rest;
            std::getline(ss, rest);
            if (!rest.empty() && rest.front() == ' ') rest.erase(rest.begin());
            doc.strs_[name] = rest;
        } else if (tag == "mat") {
            Index rows, cols;
            ss >> rows >> cols;
            Matrix m(rows, cols);
            for (Index r = 0; r < rows; ++r) {
                if (!std::getline(in, line)) {
                    throw DataError("truncated matrix '" + name + "' in " + path);
                }
                std::istringstream row(line);
                std::string token;
                for (Index c = 0; c < cols; ++c) {
                    if (!(row >> token)) {
                        throw DataError("bad matrix row in '" + name + "' in " + path);
                    }
                    m(r, c) = parse_number(token);
                }
            }
            doc.mats_[name] = std::move(m);
        } else {
            throw DataError("unknown directive '" + tag + "' in " + path);
        }
        if (ss.fail()) throw DataError("malformed line in " + path + ": " + line);
    }
    throw DataError("missing end marker in " + path);
}

}  // namespace tsreject::serialize
