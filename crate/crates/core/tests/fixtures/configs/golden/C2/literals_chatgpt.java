import java.util.List;

/**
 * Utility for rendering path-like strings.
 *
 * <p>Example: {@code render(List.of("a", "b"))} returns {@code "a/b"}.
 */
public class PathRenderer {
    /** Separator used between parts. */
    private static final String SEPARATOR = "/";

    /*
     * Multi-line block comment
     * spanning several lines.
     */
    public String render(List<String> parts) {
        return String.join(SEPARATOR, parts); // join with "/"
    }

    public char quote() {
        return '\''; // a single quote
    }
}
