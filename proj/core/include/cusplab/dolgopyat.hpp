#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cusplab/holonomy.hpp"
#include "cusplab/transfer.hpp"

namespace cusplab {

// Point z = g_{word[0..depth)}(base) with the itinerary of base continuing the word;
// -1 marks an unknown letter or one beyond the alphabet.
struct SymbolicPoint {
  cplx z{};
  std::vector<int> word;
  cplx base{};
  int depth = 0;
};

bool word_has_prefix(const std::vector<int>& word, const std::vector<int>& prefix);

struct PartitionCylinder {
  std::vector<int> word;
  GroupElement g;
  double diameter = 0.0;
  double nuMass = 0.0;
  bool flagged = false;  // diameter >= e^{-R0}/||rho_b||
};

struct FrequencyPartition {
  double rhoNorm = 1.0;
  double R0 = 1.0;
  std::vector<PartitionCylinder> cylinders;
  double coveredNu = 0.0;
  // Index of the partition cylinder that is a prefix of word, -1 if none.
  int locate(const std::vector<int>& word) const;
  size_t flagged_count() const;
};

FrequencyPartition build_partition(const SpectralData& sd, const TwistParameter& tw, double R0, int maxDepth = 8);

struct DolgopyatOptions {
  double R0 = 3.0;
  int m = 0;                    // 0: smallest m with lambda^m < 1/(8 A0)
  double tau = 0.0;             // 0: constants chain, replaced by tauPractical when impractically small
  double tauPractical = 0.25;
  double tauFloor = 1e-3;
  double eps1 = 0.0;            // 0: per cylinder, half the inscribed radius at x1 scaled by ||rho_b||
  double delta1 = 0.1;
  double eps3 = 0.0;            // 0: measured by a small window-constrained NCP scan
  int kMax = 40;
  int samplePairs = 2000;
  std::uint64_t seed = 1;
  int workers = 1;
  int lnicM = 2;
  int lnicGrid = 20;
  int probeLetters = 40;        // sub-cylinder probes per J_k
};

struct DolgopyatConstants {
  double lambdaHat = 0, A0 = 0, C2 = 0, Ccyl = 1, CDelta0 = 1;
  double eps1Lemma = 1.0, deltaRho = 1.0, CexpBP = 0.0;
  double eps2 = 0, eps3 = 0, C_BP = 0;
  double E = 0, delta1Chain = 0, epsilon1Chain = 0, c0 = 0, cChain = 0, T0 = 0, tauChain = 0;
  double delta1 = 0, tau = 0;
  int m = 0;
  double R0 = 1.0;
  std::vector<std::string> audit;
  std::string report() const;
};

struct CancellationEntry {
  int cylinder = -1;  // partition index of J
  int j = 1;          // partner branch index 1..j0
  cplx x1{}, x2{};
  std::vector<int> Jk[2];
  double diamFrac[2] = {0, 0};
  double nuFrac[2] = {0, 0};
  double eps1 = 0.0;      // scale of the annulus around x1, times ||rho_b||
  double pairing = 0.0;
  double distance = 0.0;  // |x2 - x1|
  bool weak = false;
};

struct CancellationData {
  double rhoNorm = 1.0;
  double eps1 = 0.0;  // smallest per-cylinder scale
  double delta1 = 0.0;
  double cRealized = 0.0;
  std::vector<CancellationEntry> entries;
  size_t weakCount = 0;
};

struct DenseChoice {
  int entry = -1;
  int k = 1;  // 1 or 2
  int l = 1;  // 1: alpha_0, 2: alpha_j
  double tau = 0.0;
};

struct BetaMask {
  double tau = 0.0;
  std::vector<std::vector<int>> words;  // alpha_l ++ J_k
  std::vector<std::vector<int>> bases;  // J_k
  std::vector<int> alphaIndex;          // 0 or j
  std::vector<double> taus;
  double value(const SymbolicPoint& p) const;
  // Values at grid nodes through exact cylinder containment.
  Eigen::VectorXd at_nodes(const Coding& coding, const NodeGrid& grid) const;
  double lipschitz_bound(double rhoNorm, double R0, double c, double Ccyl, double minAlphaDerivative) const;
};

// Smooth node function plus cylinder patches chi_{u Delta_0} r with r o u stored on the grid.
class PatchFunction {
 public:
  struct Patch {
    std::vector<int> word;
    GroupElement g;
    Eigen::VectorXd pulled;
  };
  Eigen::VectorXd smooth;
  std::vector<Patch> patches;

  // Letters of p beyond its known word are resolved geometrically through the coding.
  double eval(const Coding& coding, const NodeGrid& grid, const SymbolicPoint& p) const;
  static PatchFunction constant(int n, double v);
};

struct ConeReport {
  double hMin = 0.0;
  double lipH = 0.0;      // worst E||rho||h(x)D - |h(x)-h(x')|, relative to h(x)
  double trapped = 0.0;   // worst (h - |H|)/h
  double lipHH = 0.0;     // worst E||rho||h(x)D - |H(x)-H(x')|, relative to h(x)
  size_t pairs = 0;
  bool pass() const { return hMin > 0 && lipH >= 0 && trapped >= 0 && lipHH >= 0; }
};

struct DecayRow {
  int k = 0;
  double rawNorm = 0.0;
  double majorantNorm = -1.0;  // only at multiples of m
};

struct DecayReport {
  double b = 0.0;
  int n = 0;
  int m = 0;
  std::vector<DecayRow> rows;
  double eta = 0.0;
  double r2 = 0.0;
  int kMin = 0;
  double tau = 0.0;
  size_t dominationViolations = 0;
  double worstDomination = 0.0;  // max over blocks of |M^{nm}H|/h_n - 1 at sample points
  std::vector<ConeReport> cones;
  std::vector<std::vector<std::vector<int>>> omegaSets;  // J_k words per block
  size_t weakCylinders = 0;
  size_t flaggedCylinders = 0;
  bool earlyStop = false;
  std::string to_csv() const;
};

struct RecurrenceRow {
  int n = 0;
  double frequency = 0.0;
  double low = 0.0, high = 0.0;
  double coinBound = 0.0;  // P(Binomial(n, p) < kappa n) for the worst per-block hit rate p
};

// Raw powers of the normalized twisted operator in the atom-weighted L2 norm; needs no
// engine constants, so it serves any dimension and any twist.
DecayReport twisted_decay(const SpectralData& sd, const TwistParameter& tw, const Eigen::VectorXcd& H0, int kMax,
                          int workers = 1);

class DolgopyatEngine {
 public:
  DolgopyatEngine(const SpectralData& sd, const DolgopyatOptions& opt = {});
  DolgopyatEngine(const SpectralData& sd, const LNICCertificate& lnic, const DolgopyatOptions& opt = {});

  const DolgopyatConstants& constants() const { return consts_; }
  const LNICCertificate& lnic() const { return lnic_; }
  const std::vector<SymbolicPoint>& samples() const { return samples_; }
  const std::vector<double>& sample_weights() const { return weights_; }
  const Eigen::MatrixXd& real_operator() const { return P0_; }

  FrequencyPartition partition(const TwistParameter& tw) const;
  CancellationData cancellation_data(const FrequencyPartition& part, const TwistParameter& tw) const;
  // Lemma-style dichotomy at node resolution; ties broken by smaller k then l.
  std::vector<DenseChoice> dense_selection(const CancellationData& cd, const TwistParameter& tw,
                                           const Eigen::VectorXcd& H, const PatchFunction& h, double tau) const;
  BetaMask beta_mask(const CancellationData& cd, const std::vector<DenseChoice>& sel, double tau) const;
  PatchFunction dolgopyat_apply(const BetaMask& mask, const PatchFunction& h, int m) const;
  ConeReport cone_check(const Eigen::VectorXcd& H, const PatchFunction& h, double rhoNorm, int samplePairs,
                        std::uint64_t seed) const;
  DecayReport spectral_decay(const TwistParameter& tw, const Eigen::VectorXcd& H0, int kMax = 0) const;
  // Raw decay only (any twist, any dimension).
  DecayReport raw_decay(const TwistParameter& tw, const Eigen::VectorXcd& H0, int kMax) const;
  std::vector<RecurrenceRow> recurrence_frequency(const DecayReport& rep, int samples, std::uint64_t seed,
                                                  double kappa) const;

  double norm2(const Eigen::VectorXcd& H) const;
  double norm2(const PatchFunction& h) const;
  double norm1b(const Eigen::VectorXcd& H, double rhoNorm) const;
  double metric_D(const SymbolicPoint& a, const SymbolicPoint& b) const;
  SymbolicPoint symbolic(const std::vector<int>& word) const;
  // Normalized weight e^{F_d(u y)} of a branch word at y (a = 0).
  double word_weight(const std::vector<int>& word, cplx y) const;

 private:
  const SpectralData* sd_;
  DolgopyatOptions opt_;
  LNICCertificate lnic_;
  DolgopyatConstants consts_;
  Eigen::MatrixXd P0_;
  std::vector<SymbolicPoint> samples_;
  std::vector<double> weights_;
  int anchorBranch_ = 0;

  void init();
  void derive_constants();
  std::vector<int> alpha(int l, const CancellationEntry& e) const;
  std::vector<SymbolicPoint> probes(const std::vector<int>& word) const;
};

// Normalized real transfer operator at a = 0 applied m times to mask * h (node vectors).
Eigen::VectorXd dolgopyat_apply_nodes(const Eigen::MatrixXd& P0, const Eigen::VectorXd& mask,
                                      const Eigen::VectorXd& h, int m);

}  // namespace cusplab
