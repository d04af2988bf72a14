#ifndef ITRP_REPORT_HPP
#define ITRP_REPORT_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace itrp {

// Self-describing key/value tree, written as indented text. Reals are printed
// with %.17g so a parsed-back report reproduces every double bit for bit.
class ReportNode {
  public:
    ReportNode() = default;
    explicit ReportNode(std::string key) : key_(std::move(key)) {}

    ReportNode& section(const std::string& key);
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, const char* value);
    void set(const std::string& key, double value);
    void set(const std::string& key, int value);
    void set(const std::string& key, long long value);
    void set(const std::string& key, bool value);

    const std::string& key() const { return key_; }
    const std::string& value() const { return value_; }
    bool is_leaf() const { return leaf_; }
    const std::vector<ReportNode>& children() const { return children_; }

    // Dotted path lookup, e.g. "result.verdict"; nullptr when absent.
    const ReportNode* find(const std::string& path) const;

    void write(std::ostream& os) const;
    std::string to_string() const;
    static ReportNode parse(const std::string& text);

  private:
    std::string key_;
    std::string value_;
    bool leaf_ = false;
    std::vector<ReportNode> children_;

    void write_at(std::ostream& os, int depth) const;
};

std::string format_real(double value);

struct ReportDiff {
    bool equal = true;
    std::string message;
};

// Structural comparison: identical keys in identical order; numeric leaves
// compare within tol, other leaves compare as strings. Subtrees whose key
// appears in skip_keys (any depth) are ignored, which keeps timings out of
// determinism checks.
ReportDiff compare_reports(const ReportNode& a, const ReportNode& b, double tol,
                           std::span<const std::string> skip_keys);

}  // namespace itrp

#endif
