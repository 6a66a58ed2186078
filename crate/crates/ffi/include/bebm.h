#ifndef BEBM_H
#define BEBM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success.
typedef enum BebmStatus {
  BEBM_STATUS_OK = 0,
  BEBM_STATUS_NULL_POINTER = 1,
  BEBM_STATUS_INVALID_ARGUMENT = 2,
  BEBM_STATUS_VALIDATION = 3,
  BEBM_STATUS_SIZE_MISMATCH = 4,
  BEBM_STATUS_IO = 5,
  BEBM_STATUS_FORMAT = 6,
  BEBM_STATUS_NUMERICAL = 7,
  BEBM_STATUS_TRAINING = 8,
  BEBM_STATUS_BUFFER_TOO_SMALL = 9,
  BEBM_STATUS_PANIC = 10,
} BebmStatus;

// Measurement record in one Pauli basis.
typedef struct BebmDataset BebmDataset;

// Trained or freshly initialised Born machine.
typedef struct BebmModel BebmModel;

// Matrix product state.
typedef struct BebmMps BebmMps;

// Headline metrics of a model against a reference state.
typedef struct BebmMetrics {
  double c_x;
  double c_y;
  double c_z;
  double quantum_fidelity;
} BebmMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread; empty after a
// success. Valid until the next call on the same thread.
const char *bebm_last_error(void);

const char *bebm_version(void);

enum BebmStatus bebm_mps_read(const char *path, struct BebmMps **out_mps);

enum BebmStatus bebm_mps_write(const struct BebmMps *mps, const char *path);

void bebm_mps_free(struct BebmMps *mps);

enum BebmStatus bebm_mps_n_sites(const struct BebmMps *mps, size_t *out_n);

// Amplitude `⟨bits|ψ⟩` for a configuration of `len` entries in {0, 1}.
enum BebmStatus bebm_mps_amplitude(const struct BebmMps *mps,
                                   const uint8_t *bits,
                                   size_t len,
                                   double *out_re,
                                   double *out_im);

// Von Neumann entropy across the bond after site `cut` (1-based count of left sites).
enum BebmStatus bebm_mps_entropy(const struct BebmMps *mps, size_t cut, double *out_s);

// Entanglement spectrum, largest first. Writes at most `cap` values and
// always reports the full length in `out_len`.
enum BebmStatus bebm_mps_entanglement_spectrum(const struct BebmMps *mps,
                                               size_t cut,
                                               double *buf,
                                               size_t cap,
                                               size_t *out_len);

enum BebmStatus bebm_quantum_fidelity(const struct BebmMps *a,
                                      const struct BebmMps *b,
                                      double *out_f);

// Ground state of the anisotropic XY chain with unit coupling.
enum BebmStatus bebm_ground_state_xy(size_t n_sites,
                                     double gamma,
                                     double field,
                                     struct BebmMps **out_mps,
                                     double *out_energy);

// Ground state of the Rydberg chain in units of Ω and the lattice spacing,
// interactions kept out to `truncation_range` neighbours.
enum BebmStatus bebm_ground_state_rydberg(size_t n_sites,
                                          double delta_over_omega,
                                          double rb_over_a,
                                          size_t truncation_range,
                                          struct BebmMps **out_mps,
                                          double *out_energy);

// Draw `shots` measurements of `mps` in basis `'x'`, `'y'` or `'z'`.
enum BebmStatus bebm_sample(const struct BebmMps *mps,
                            char basis,
                            size_t shots,
                            uint64_t seed,
                            struct BebmDataset **out_data);

enum BebmStatus bebm_dataset_read(const char *path, struct BebmDataset **out_data);

enum BebmStatus bebm_dataset_write(const struct BebmDataset *data, const char *path);

enum BebmStatus bebm_dataset_len(const struct BebmDataset *data, size_t *out_len);

void bebm_dataset_free(struct BebmDataset *data);

enum BebmStatus bebm_model_new(size_t n_sites,
                               size_t bond_dim,
                               bool complex_valued,
                               uint64_t seed,
                               struct BebmModel **out_model);

void bebm_model_free(struct BebmModel *model);

// Train in place on `count` datasets (one per basis) with Adam.
// `reference` may be null. Final full-data loss goes to `out_loss`,
// final fidelity (NaN without a reference) to `out_fidelity`.
enum BebmStatus bebm_train(struct BebmModel *model,
                           const struct BebmDataset *const *datasets,
                           size_t count,
                           size_t epochs,
                           double learning_rate,
                           uint64_t seed,
                           const struct BebmMps *reference,
                           double *out_loss,
                           double *out_fidelity);

// Normalised copy of the model's state.
enum BebmStatus bebm_model_state(const struct BebmModel *model, struct BebmMps **out_mps);

enum BebmStatus bebm_model_write(const struct BebmModel *model, const char *path);

enum BebmStatus bebm_model_read(const char *path, struct BebmModel **out_model);

// Classical fidelities in all three bases and the quantum fidelity.
enum BebmStatus bebm_evaluate(const struct BebmModel *model,
                              const struct BebmMps *reference,
                              size_t shots,
                              uint64_t seed,
                              struct BebmMetrics *out_metrics);

// Run a `bebm` subcommand that needs only a recipe (`ground-truth`,
// `phase-map`, `locate-critical`, `sample`, `train`, `matrix`, `scaling`).
// `out_dir` may be null. Usage problems report `Validation`.
enum BebmStatus bebm_run_recipe(const char *recipe_path, const char *command, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BEBM_H */
