#ifndef QRVDP_H
#define QRVDP_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every entry point.
typedef enum QrvdpStatus {
  QRVDP_STATUS_OK = 0,
  QRVDP_STATUS_NULL_POINTER = 1,
  QRVDP_STATUS_INVALID_ARGUMENT = 2,
  QRVDP_STATUS_TRUNCATION = 3,
  QRVDP_STATUS_CONVERGENCE = 4,
  QRVDP_STATUS_UNSUPPORTED = 5,
  QRVDP_STATUS_IO = 6,
  QRVDP_STATUS_INTERNAL = 7,
  QRVDP_STATUS_PANIC = 8,
} QrvdpStatus;

// Density matrix in a truncated Fock basis.
typedef struct QrvdpDensityMatrix QrvdpDensityMatrix;

// Oscillator rates and drive.
typedef struct QrvdpParams QrvdpParams;

// Recorded time evolution.
typedef struct QrvdpTrajectory QrvdpTrajectory;

// One recorded sample of a trajectory.
typedef struct QrvdpRecord {
  double t;
  double trace;
  double number;
  double a_re;
  double a_im;
  double s_q;
} QrvdpRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static nul-terminated string.
const char *qrvdp_version(void);

// Message of the last failure on this thread, or null. Valid until the next call.
const char *qrvdp_last_error(void);

// Creates a parameter set. `omega_drive` is the drive strength, `omega_d` its angular frequency.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle pointer.
enum QrvdpStatus qrvdp_params_new(double gamma1_plus,
                                  double gamma1_minus,
                                  double alpha,
                                  double beta,
                                  double delta,
                                  double omega_drive,
                                  double omega_d,
                                  struct QrvdpParams **out);

// Parameters and Fock dimension of a named preset.
//
// # Safety
// `name` must be a nul-terminated string; `out` and `dim` valid out-pointers.
enum QrvdpStatus qrvdp_params_preset(const char *name, struct QrvdpParams **out, size_t *dim);

// # Safety
// `params` must be null or a handle from this library not yet freed.
void qrvdp_params_free(struct QrvdpParams *params);

// Classical limit-cycle amplitude of the undriven scaled equation.
//
// # Safety
// `params` must be a live handle; `amplitude` a valid out-pointer.
enum QrvdpStatus qrvdp_limit_cycle_amplitude(const struct QrvdpParams *params, double *amplitude);

// Undriven laboratory-frame steady state at Fock dimension `dim`.
//
// # Safety
// `params` must be a live handle; `out` a valid out-pointer.
enum QrvdpStatus qrvdp_steady_state(const struct QrvdpParams *params,
                                    size_t dim,
                                    struct QrvdpDensityMatrix **out);

// Coherent state |α⟩ truncated to `dim`; fails if the discarded weight exceeds `leakage_threshold`.
//
// # Safety
// `out` must be a valid out-pointer.
enum QrvdpStatus qrvdp_density_coherent(double alpha_re,
                                        double alpha_im,
                                        size_t dim,
                                        double leakage_threshold,
                                        struct QrvdpDensityMatrix **out);

// # Safety
// `rho` must be null or a handle from this library not yet freed.
void qrvdp_density_free(struct QrvdpDensityMatrix *rho);

// # Safety
// `rho` must be a live handle; `dim` a valid out-pointer.
enum QrvdpStatus qrvdp_density_dim(const struct QrvdpDensityMatrix *rho, size_t *dim);

// Copies ρ in column-major order into `re` and `im`, each of length `len >= dim * dim`.
//
// # Safety
// `re` and `im` must point to at least `len` writable doubles.
enum QrvdpStatus qrvdp_density_elements(const struct QrvdpDensityMatrix *rho,
                                        double *re,
                                        double *im,
                                        size_t len);

// Phase-localization measure S_q.
//
// # Safety
// `rho` must be a live handle; `value` a valid out-pointer.
enum QrvdpStatus qrvdp_s_q(const struct QrvdpDensityMatrix *rho, double *value);

// Mean excitation number ⟨a†a⟩.
//
// # Safety
// `rho` must be a live handle; `value` a valid out-pointer.
enum QrvdpStatus qrvdp_mean_number(const struct QrvdpDensityMatrix *rho, double *value);

// Radius and angle of the Wigner maximum on a polar grid of `n_r` radii up to `r_max` and `n_phi` angles.
//
// # Safety
// `rho` must be a live handle; `radius` and `phi` valid out-pointers.
enum QrvdpStatus qrvdp_wigner_max_radius(const struct QrvdpDensityMatrix *rho,
                                         double r_max,
                                         size_t n_r,
                                         size_t n_phi,
                                         double *radius,
                                         double *phi);

// Integrates the master equation in the laboratory frame from `rho0` up to
// `t_final`, recording every `record_interval`. `drive_model` is 0 for RWA, 1 for the full drive.
//
// # Safety
// `params` and `rho0` must be live handles; `out` a valid out-pointer.
enum QrvdpStatus qrvdp_evolve(const struct QrvdpParams *params,
                              const struct QrvdpDensityMatrix *rho0,
                              int32_t drive_model,
                              double t_final,
                              double record_interval,
                              struct QrvdpTrajectory **out);

// # Safety
// `traj` must be null or a handle from this library not yet freed.
void qrvdp_trajectory_free(struct QrvdpTrajectory *traj);

// # Safety
// `traj` must be a live handle; `len` a valid out-pointer.
enum QrvdpStatus qrvdp_trajectory_len(const struct QrvdpTrajectory *traj, size_t *len);

// # Safety
// `traj` must be a live handle; `record` a valid out-pointer.
enum QrvdpStatus qrvdp_trajectory_record(const struct QrvdpTrajectory *traj,
                                         size_t index,
                                         struct QrvdpRecord *record);

// Copy of the state at the final time as a new handle.
//
// # Safety
// `traj` must be a live handle; `out` a valid out-pointer.
enum QrvdpStatus qrvdp_trajectory_final_state(const struct QrvdpTrajectory *traj,
                                              struct QrvdpDensityMatrix **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QRVDP_H */
