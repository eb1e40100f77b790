#ifndef TSREJECT_SERIALIZE_HPP
#define TSREJECT_SERIALIZE_HPP

#include <map>
#include <string>

#include "tsreject/common.hpp"

namespace tsreject::serialize {

/**
 * Line-oriented text container for model files. Values are written with
 * 17 significant digits so a save/load round-trip is exact, and the writer
 * is fully deterministic (keys emitted in sorted order).
 *
 * Format:
 *   tsreject-file v1
 *   int <name> <value>
 *   num <name> <value>
 *   str <name> <value...>
 *   mat <name> <rows> <cols>
 *   <row of values>          (rows lines)
 *   end
 */
class Document {
public:
    void put_int(const std::string& name, long long value);
    void put_num(const std::string& name, double value);
    void put_str(const std::string& name, const std::string& value);
    void put_mat(const std::string& name, const Matrix& value);
    void put_vec(const std::string& name, const Vector& value);  // stored as 1-column mat

    long long get_int(const std::string& name) const;
    double get_num(const std::string& name) const;
    const std::string& get_str(const std::string& name) const;
    const Matrix& get_mat(const std::string& name) const;
    Vector get_vec(const std::string& name) const;

    bool has(const std::string& name) const;

    void save(const std::string& path) const;
    static Document load(const std::string& path);

private:
    std::map<std::string, long long> ints_;
    std::map<std::string, double> nums_;
    std::map<std::string, std::string> strs_;
    std::map<std::string, Matrix> mats_;
};

/// Format a double with full round-trip precision (%.17g).
std::string format_double(double value);

}  // namespace tsreject::serialize

#endif  // TSREJECT_SERIALIZE_HPP
