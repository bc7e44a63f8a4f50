import { z } from "zod";

/**
 * Mirror of the core's config JSON schema (`mafs-config/1`). Validation
 * happens before anything is written to disk or executed; unknown keys are
 * rejected outright.
 */
export const selectionConfigSchema = z
  .object({
    schema: z.literal("mafs-config/1").default("mafs-config/1"),
    lambda: z.number().nonnegative().optional(),
    gamma: z.number().positive().optional(),
    epsilon: z.number().positive().max(1e-3).optional(),
    tau_max: z.number().positive().optional(),
    hidden_dim: z.number().int().positive().optional(),
    width_scale: z.number().positive().nullable().optional(),
    attention_hidden_dims: z.array(z.number().int().positive()).nullable().optional(),
    predictor_hidden_dims: z.array(z.number().int().positive()).nullable().optional(),
    dropout_rate: z.number().min(0).lt(1).optional(),
    learning_rate: z.number().positive().optional(),
    weight_decay: z.number().nonnegative().optional(),
    batch_size: z.number().int().positive().optional(),
    max_epochs: z.number().int().positive().optional(),
    patience: z.number().int().positive().optional(),
    k: z.number().int().positive().nullable().optional(),
    ell: z.number().int().positive().optional(),
    seed: z.number().int().optional(),
    filters: z.array(z.enum(["sis", "kendall", "dcor"])).nonempty().optional(),
    bounded_alpha: z.boolean().optional(),
    monitor: z.enum(["total", "pred"]).optional(),
    val_fraction: z.number().gt(0).lt(1).optional(),
    use_batchnorm: z.boolean().optional(),
    n_trees: z.number().int().positive().optional(),
    attention_init: z.enum(["prior", "random"]).optional(),
    attention_lr_scale: z.number().positive().optional(),
  })
  .strict();

export type SelectionConfig = z.input<typeof selectionConfigSchema>;

export function validateConfig(config: SelectionConfig): Record<string, unknown> {
  const parsed = selectionConfigSchema.parse(config);
  const out: Record<string, unknown> = {};
  for (const [key, value] of Object.entries(parsed)) {
    if (value !== undefined) out[key] = value;
  }
  return out;
}
