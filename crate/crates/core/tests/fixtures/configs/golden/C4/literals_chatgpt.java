import java.util.List;

public class PathRenderer {
    private static final String SEPARATOR = "/";

    public String render(List<String> parts) {
        return String.join(SEPARATOR, parts);
    }

    public char quote() {
        return '\'';
    }
}
